use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ugsel::calibration::{match_for_calibration, CalibrationReport, CalibrationTally};
use ugsel::config::Config;
use ugsel::consensus::{build_consensus, PassSet};
use ugsel::eval::{map_report, pseudo_label_hits, GroundTruth, ImageEval, ScoredBox};
use ugsel::gates::{select_pseudo_label_indices, select_pseudo_labels, Variant};
use ugsel::pipeline::{
    compare_variants, run_round, schema_rejection, simulated_image, simulated_inputs, ImageInput, ManifestSink, Round,
    RoundSettings,
};
use ugsel::records::{
    read_all, BadLine, ClusterRecord, GroundTruthRecord, RecordReader, RecordWriter,
};
use ugsel::seed::{derive_seed, rng_from_seed};
use ugsel::tiling::sample_source_tile_with;

#[derive(Parser)]
#[command(name = "ugsel", version, about = "Uncertainty-guided pseudo-label and tile selection")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; UGSEL_* environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["ssal", "ssal-dagger"])]
    variant: Option<String>,
    #[arg(long, global = true, default_value = "r1")]
    round: String,
    /// Pass sets, one per line.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Ground truth, one record per image.
    #[arg(long, global = true)]
    gt: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Where to write the JSON report; defaults to `<out-dir>/report.json`.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes and detector passes.
    Simulate {
        #[arg(long)]
        scenes: Option<usize>,
    },
    /// Write the consensus clusters of every image.
    Consensus,
    /// Write pseudo-labels and rejections.
    Select,
    /// Write target tiles, or source tiles when only --gt is given.
    Tile,
    /// Calibration error of all anchors and of the selected ones.
    Calibrate,
    /// Average precision of the first pass and pseudo-label precision.
    Evaluate,
    /// One adaptation round: manifests plus report.
    Round,
    /// Compare both variants with confidence ranking at matched counts.
    Compare,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(c: &Common) -> Result<Config> {
    let mut cfg = Config::load(c.config.as_deref()).context("loading configuration")?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(v) = &c.variant {
        cfg.gates.variant = v.parse::<Variant>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_report<T: Serialize>(c: &Common, report: &T, table: &str) -> Result<()> {
    let path = c.report.clone().unwrap_or_else(|| c.out_dir.join("report.json"));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    print!("{table}");
    Ok(())
}

fn load_ground_truth(path: &Path) -> Result<HashMap<String, Vec<GroundTruth>>> {
    let (records, bad): (Vec<GroundTruthRecord>, Vec<BadLine>) = read_all(open(path)?);
    if let Some(b) = bad.first() {
        bail!("{}: line {}: {}", path.display(), b.line, b.error);
    }
    Ok(records.into_iter().map(|r| (r.image_id, r.objects)).collect())
}

/// Pass sets from `--input` paired with `--gt`, or simulated ones.
fn inputs<'a>(
    c: &Common,
    cfg: &'a Config,
    round: Round,
) -> Result<Box<dyn Iterator<Item = std::result::Result<ImageInput, BadLine>> + 'a>> {
    let gts = c.gt.as_deref().map(load_ground_truth).transpose()?;
    match &c.input {
        Some(path) => {
            let reader = RecordReader::<_, PassSet>::new(open(path)?);
            Ok(Box::new(reader.map(move |r| {
                r.map(|passes| {
                    let ground_truth = gts.as_ref().map(|m| m.get(&passes.image_id).cloned().unwrap_or_default());
                    ImageInput { passes, ground_truth }
                })
            })))
        }
        None => {
            let images = simulated_inputs(cfg, round).collect::<ugsel::Result<Vec<_>>>()?;
            Ok(Box::new(images.into_iter().map(Ok)))
        }
    }
}

/// Like [`inputs`] but every image must carry ground truth.
fn labelled(c: &Common, cfg: &Config, round: Round) -> Result<Vec<(PassSet, Vec<GroundTruth>)>> {
    if c.input.is_some() && c.gt.is_none() {
        bail!("--gt is required with --input for this command");
    }
    let mut out = Vec::new();
    for item in inputs(c, cfg, round)? {
        let input = item.map_err(|b| anyhow::anyhow!("line {}: {}", b.line, b.error))?;
        out.push((input.passes, input.ground_truth.unwrap_or_default()));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let cfg = load_config(c)?;
    let round: Round = c.round.parse()?;
    match cli.command {
        Command::Simulate { scenes } => {
            let mut cfg = cfg;
            if let Some(n) = scenes {
                cfg.simulator.n_scenes = n;
            }
            let mut passes = RecordWriter::new(create(&c.out_dir, "passes.jsonl")?);
            let mut gts = RecordWriter::new(create(&c.out_dir, "gt.jsonl")?);
            for i in 0..cfg.simulator.n_scenes as u64 {
                let image = simulated_image(&cfg, round, i)?;
                gts.write(&GroundTruthRecord {
                    image_id: image.passes.image_id.clone(),
                    dims: image.passes.dims,
                    objects: image.ground_truth.unwrap_or_default(),
                })?;
                passes.write(&image.passes)?;
            }
            let n = passes.written();
            passes.finish()?;
            gts.finish()?;
            println!("wrote {n} images to {}", c.out_dir.display());
        }
        Command::Consensus => {
            let mut out = RecordWriter::new(create(&c.out_dir, "clusters.jsonl")?);
            let mut rejections = RecordWriter::new(create(&c.out_dir, "rejections.jsonl")?);
            for item in inputs(c, &cfg, round)? {
                match item {
                    Ok(input) => {
                        for cluster in build_consensus(&input.passes, &cfg.gates.consensus_params()) {
                            out.write(&ClusterRecord {
                                image_id: input.passes.image_id.clone(),
                                cluster,
                            })?;
                        }
                    }
                    Err(bad) => rejections.write(&schema_rejection(&bad))?,
                }
            }
            println!("wrote {} clusters, {} unreadable lines", out.written(), rejections.written());
            out.finish()?;
            rejections.finish()?;
        }
        Command::Select | Command::Round => {
            let full = matches!(cli.command, Command::Round);
            let dir = &c.out_dir;
            let tiles: Box<dyn Write> = if full {
                Box::new(create(dir, "tiles.jsonl")?)
            } else {
                Box::new(std::io::sink())
            };
            let mut sink = ManifestSink::new(
                Box::new(create(dir, "pseudo_labels.jsonl")?) as Box<dyn Write>,
                tiles,
                Box::new(create(dir, "rejections.jsonl")?),
            );
            let settings = RoundSettings::from_config(&cfg, round);
            let report = run_round(inputs(c, &cfg, round)?, &settings, &mut sink)?;
            sink.finish()?;
            write_report(c, &report, &report.summary_table())?;
        }
        Command::Tile => {
            if c.input.is_none() && c.gt.is_some() {
                source_tiles(c, &cfg)?;
            } else {
                let mut sink = ManifestSink::new(
                    Box::new(std::io::sink()) as Box<dyn Write>,
                    Box::new(create(&c.out_dir, "tiles.jsonl")?),
                    Box::new(create(&c.out_dir, "rejections.jsonl")?),
                );
                let settings = RoundSettings::from_config(&cfg, round);
                let report = run_round(inputs(c, &cfg, round)?, &settings, &mut sink)?;
                println!("wrote {} tiles", sink.tiles.written());
                sink.finish()?;
                write_report(c, &report, &report.summary_table())?;
            }
        }
        Command::Calibrate => {
            let mut all = CalibrationTally::new(cfg.evaluation.ece_bins);
            let mut selected = CalibrationTally::new(cfg.evaluation.ece_bins);
            for (ps, gts) in labelled(c, &cfg, round)? {
                let clusters = build_consensus(&ps, &cfg.gates.consensus_params());
                let picked = select_pseudo_label_indices(&clusters, &cfg.gates).selected;
                let boxes: Vec<ScoredBox> = clusters
                    .iter()
                    .map(|k| ScoredBox {
                        bbox: k.anchor.bbox,
                        class_id: k.anchor.class_id,
                        confidence: k.anchor.confidence,
                    })
                    .collect();
                for (i, m) in match_for_calibration(&boxes, &gts, cfg.evaluation.iou_threshold).iter().enumerate() {
                    all.add(m);
                    if picked.contains(&i) {
                        selected.add(m);
                    }
                }
            }
            #[derive(Serialize)]
            struct Report {
                all: CalibrationReport,
                selected: Option<CalibrationReport>,
            }
            let report = Report {
                all: all.report()?,
                selected: selected.report().ok(),
            };
            let mut table = format!("ece all      {:.4} over {}\n", report.all.ece, report.all.total);
            if let Some(s) = &report.selected {
                table += &format!("ece selected {:.4} over {}\n", s.ece, s.total);
            }
            write_report(c, &report, &table)?;
        }
        Command::Evaluate => {
            let data = labelled(c, &cfg, round)?;
            let (mut hits, mut total) = (0, 0);
            let images: Vec<ImageEval> = data
                .iter()
                .map(|(ps, gts)| {
                    let pls = select_pseudo_labels(&build_consensus(ps, &cfg.gates.consensus_params()), &cfg.gates);
                    let (h, t) = pseudo_label_hits(&pls, gts, cfg.evaluation.iou_threshold);
                    hits += h;
                    total += t;
                    ImageEval {
                        detections: ps.passes.first().map_or_else(Vec::new, |p| {
                            p.iter()
                                .map(|d| ScoredBox {
                                    bbox: d.bbox,
                                    class_id: d.class_id,
                                    confidence: d.confidence,
                                })
                                .collect()
                        }),
                        ground_truths: gts.clone(),
                    }
                })
                .collect();
            let mut report = map_report(&images);
            report.pl_precision = (total > 0).then(|| 100.0 * hits as f64 / total as f64);
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            let table = format!(
                "mAP@0.5 {}  mAP@0.75 {}  mAP@[.5:.95] {}\nAP small {}  medium {}  large {}\npseudo-label precision % {}\n",
                f(report.map50),
                f(report.map75),
                f(report.ap_mean),
                f(report.ap_small),
                f(report.ap_medium),
                f(report.ap_large),
                f(report.pl_precision)
            );
            write_report(c, &report, &table)?;
        }
        Command::Compare => {
            let data = labelled(c, &cfg, round)?;
            let report = compare_variants(&data, &cfg.gates, cfg.evaluation.iou_threshold, cfg.evaluation.ece_bins)?;
            write_report(c, &report, &report.summary_table())?;
        }
    }
    Ok(())
}

/// One random large crop per ground-truth image, for the source domain.
fn source_tiles(c: &Common, cfg: &Config) -> Result<()> {
    let path = c.gt.as_deref().expect("checked by caller");
    let mut out = RecordWriter::new(create(&c.out_dir, "tiles.jsonl")?);
    let mut rejections = RecordWriter::new(create(&c.out_dir, "rejections.jsonl")?);
    let mut skipped = 0;
    for item in RecordReader::<_, GroundTruthRecord>::new(open(path)?) {
        let rec = match item {
            Ok(r) => r,
            Err(bad) => {
                rejections.write(&schema_rejection(&bad))?;
                continue;
            }
        };
        let mut rng = rng_from_seed(derive_seed(derive_seed(cfg.seed, "source-tiles"), &rec.image_id));
        let boxes: Vec<_> = rec.objects.iter().map(|g| g.bbox).collect();
        match sample_source_tile_with(&mut rng, &rec.image_id, &boxes, rec.dims, &cfg.tiling) {
            Some(tile) => out.write(&tile)?,
            None => skipped += 1,
        }
    }
    println!(
        "wrote {} source tiles, {skipped} images without an acceptable crop, {} unreadable lines",
        out.written(),
        rejections.written()
    );
    out.finish()?;
    rejections.finish()?;
    Ok(())
}
