//! Round orchestration: consensus, gating and tiling per image, with
//! mergeable accumulators feeding a round report.
//!
//! R0 only emits tiles; pseudo-labels that pass the gate are recorded as
//! deferred. R1 and R2 emit both. Every input detection ends up as a
//! pseudo-label, a tile anchor, or a rejection with a reason code.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{match_for_calibration, CalibrationTally};
use crate::config::Config;
use crate::consensus::{build_consensus, build_consensus_with_duplicates, ConsensusCluster, PassSet};
use crate::error::{Error, Result};
use crate::eval::{greedy_match, pseudo_label_hits, GroundTruth, ScoredBox};
use crate::gates::{
    classify, select_pseudo_label_indices, GateConfig, PseudoLabel, ReasonCode, Variant, Verdict,
};
use crate::records::{BadLine, PseudoLabelRecord, RecordWriter, RejectionRecord};
use crate::seed::{derive_seed, derive_seed_indexed};
use crate::sim::{generate_scene, round_schedule, simulate_passes};
use crate::tiling::{extract_target_tile, full_image_draw, full_image_tile, AnchorRef, TileKind, TileSpec, TilingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Round {
    R0,
    R1,
    R2,
}

impl Round {
    pub const ALL: [Round; 3] = [Round::R0, Round::R1, Round::R2];

    pub fn index(self) -> u32 {
        self as u32
    }

    /// Trainer iterations the round stands for. Metadata only.
    pub fn iterations(self) -> u32 {
        match self {
            Round::R0 => 5_000,
            Round::R1 | Round::R2 => 10_000,
        }
    }

    pub fn emits_pseudo_labels(self) -> bool {
        self != Round::R0
    }
}

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.index())
    }
}

impl FromStr for Round {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r0" | "0" => Ok(Round::R0),
            "r1" | "1" => Ok(Round::R1),
            "r2" | "2" => Ok(Round::R2),
            _ => Err(Error::Config(format!("unknown round {s:?}, expected r0, r1 or r2"))),
        }
    }
}

/// Everything one round needs besides its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSettings {
    pub round: Round,
    pub gates: GateConfig,
    pub tiling: TilingConfig,
    pub seed: u64,
    pub iou_threshold: f64,
    pub ece_bins: usize,
}

impl RoundSettings {
    pub fn from_config(cfg: &Config, round: Round) -> Self {
        Self {
            round,
            gates: cfg.gates,
            tiling: cfg.tiling,
            seed: cfg.seed,
            iou_threshold: cfg.evaluation.iou_threshold,
            ece_bins: cfg.evaluation.ece_bins,
        }
    }

    fn full_image_seed(&self) -> u64 {
        derive_seed(self.seed, &format!("full-image/{}", self.round))
    }
}

/// One image's passes, with ground truth in simulator mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageInput {
    pub passes: PassSet,
    pub ground_truth: Option<Vec<GroundTruth>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageOutput {
    pub image_id: String,
    pub pseudo_labels: Vec<PseudoLabelRecord>,
    pub tiles: Vec<TileSpec>,
    pub rejections: Vec<RejectionRecord>,
}

/// Counts and calibration tallies of a round. Merging is associative and
/// commutative over the integer fields; tallies are merged in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundAccumulator {
    pub n_images: usize,
    pub n_detections: usize,
    pub n_pseudo_labels: usize,
    pub n_tile_anchors: usize,
    pub n_full_image_tiles: usize,
    pub n_images_with_gt: usize,
    pub pl_checked: usize,
    pub pl_hits: usize,
    pub tiles_checked: usize,
    pub tiles_on_object: usize,
    pub ece_all: CalibrationTally,
    pub ece_selected: CalibrationTally,
    pub reasons: BTreeMap<ReasonCode, usize>,
}

impl RoundAccumulator {
    pub fn new(ece_bins: usize) -> Self {
        Self {
            n_images: 0,
            n_detections: 0,
            n_pseudo_labels: 0,
            n_tile_anchors: 0,
            n_full_image_tiles: 0,
            n_images_with_gt: 0,
            pl_checked: 0,
            pl_hits: 0,
            tiles_checked: 0,
            tiles_on_object: 0,
            ece_all: CalibrationTally::new(ece_bins),
            ece_selected: CalibrationTally::new(ece_bins),
            reasons: BTreeMap::new(),
        }
    }

    pub fn merge(&mut self, other: &RoundAccumulator) {
        self.n_images += other.n_images;
        self.n_detections += other.n_detections;
        self.n_pseudo_labels += other.n_pseudo_labels;
        self.n_tile_anchors += other.n_tile_anchors;
        self.n_full_image_tiles += other.n_full_image_tiles;
        self.n_images_with_gt += other.n_images_with_gt;
        self.pl_checked += other.pl_checked;
        self.pl_hits += other.pl_hits;
        self.tiles_checked += other.tiles_checked;
        self.tiles_on_object += other.tiles_on_object;
        self.ece_all.merge(&other.ece_all);
        self.ece_selected.merge(&other.ece_selected);
        for (reason, n) in &other.reasons {
            *self.reasons.entry(*reason).or_insert(0) += n;
        }
    }

    fn reject(&mut self, reason: ReasonCode) {
        *self.reasons.entry(reason).or_insert(0) += 1;
    }

    pub fn n_rejections(&self) -> usize {
        self.reasons.values().sum()
    }

    pub fn report(&self, round: Round, variant: Variant) -> RoundReport {
        let pct = |num: usize, den: usize| (den > 0).then(|| 100.0 * num as f64 / den as f64);
        RoundReport {
            round,
            variant,
            iterations: round.iterations(),
            n_images: self.n_images,
            n_detections: self.n_detections,
            n_pseudo_labels: self.n_pseudo_labels,
            n_tiles: self.n_tile_anchors,
            n_full_image_tiles: self.n_full_image_tiles,
            pl_precision: pct(self.pl_hits, self.pl_checked),
            ece_all: self.ece_all.report().ok().map(|r| r.ece),
            ece_selected: self.ece_selected.report().ok().map(|r| r.ece),
            tiles_on_object_pct: pct(self.tiles_on_object, self.tiles_checked),
            rejections: self.reasons.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: Round,
    pub variant: Variant,
    pub iterations: u32,
    pub n_images: usize,
    pub n_detections: usize,
    pub n_pseudo_labels: usize,
    /// Target tiles anchored on uncertain detections.
    pub n_tiles: usize,
    /// Whole-image tiles of the dagger variant, not part of `n_tiles`.
    pub n_full_image_tiles: usize,
    /// Percent of pseudo-labels matching a ground truth; needs ground truth.
    pub pl_precision: Option<f64>,
    /// ECE of every consensus anchor, by anchor confidence.
    pub ece_all: Option<f64>,
    /// ECE of the anchors the pseudo-label gate selects.
    pub ece_selected: Option<f64>,
    /// Percent of anchored tiles containing a ground-truth box center.
    pub tiles_on_object_pct: Option<f64>,
    pub rejections: BTreeMap<ReasonCode, usize>,
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

impl RoundReport {
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "round {} ({}, {} iterations)", self.round, self.variant.as_str(), self.iterations);
        let rows = [
            ("images", self.n_images.to_string()),
            ("detections", self.n_detections.to_string()),
            ("pseudo-labels", self.n_pseudo_labels.to_string()),
            ("tiles", self.n_tiles.to_string()),
            ("whole-image tiles", self.n_full_image_tiles.to_string()),
            ("pl precision %", opt(self.pl_precision, 2)),
            ("ece all", opt(self.ece_all, 4)),
            ("ece selected", opt(self.ece_selected, 4)),
            ("tiles on object %", opt(self.tiles_on_object_pct, 2)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "  {k:<20} {v:>10}");
        }
        for (reason, n) in &self.rejections {
            let _ = writeln!(s, "  reject {:<13} {n:>10}", reason.as_str());
        }
        s
    }
}

fn scored(c: &ConsensusCluster) -> ScoredBox {
    ScoredBox {
        bbox: c.anchor.bbox,
        class_id: c.anchor.class_id,
        confidence: c.anchor.confidence,
    }
}

fn rejection(image_id: &str, c: &ConsensusCluster, reason: ReasonCode) -> RejectionRecord {
    RejectionRecord {
        image_id: Some(image_id.to_string()),
        pass_index: Some(c.anchor.pass_index),
        detection_index: Some(c.anchor_index),
        line: None,
        reason,
        detail: None,
    }
}

/// Rejection for an input line that could not be read.
pub fn schema_rejection(bad: &BadLine) -> RejectionRecord {
    RejectionRecord {
        image_id: None,
        pass_index: None,
        detection_index: None,
        line: Some(bad.line),
        reason: ReasonCode::SchemaInvalid,
        detail: Some(bad.error.to_string()),
    }
}

/// Consensus, gating and tiling for a single image.
pub fn process_image(input: &ImageInput, s: &RoundSettings) -> (ImageOutput, RoundAccumulator) {
    let ps = &input.passes;
    let id = ps.image_id.as_str();
    let mut acc = RoundAccumulator::new(s.ece_bins);
    let mut out = ImageOutput {
        image_id: id.to_string(),
        ..Default::default()
    };
    acc.n_images = 1;
    acc.n_detections = ps.n_detections();

    let (kept, dropped) = build_consensus_with_duplicates(ps, &s.gates.consensus_params());
    for c in &dropped {
        out.rejections.push(rejection(id, c, ReasonCode::Duplicate));
        acc.reject(ReasonCode::Duplicate);
    }

    let selection = select_pseudo_label_indices(&kept, &s.gates);
    let mut selected = vec![false; kept.len()];
    selection.selected.iter().for_each(|&i| selected[i] = true);
    let mut suppressed = vec![false; kept.len()];
    selection.suppressed.iter().for_each(|&i| suppressed[i] = true);

    let mut emitted: Vec<PseudoLabel> = Vec::new();
    for (i, c) in kept.iter().enumerate() {
        if selected[i] {
            if s.round.emits_pseudo_labels() {
                let label = PseudoLabel::from_cluster(c);
                emitted.push(label.clone());
                out.pseudo_labels.push(PseudoLabelRecord {
                    image_id: id.to_string(),
                    round: s.round,
                    variant: s.gates.variant,
                    label,
                });
            } else {
                out.rejections.push(rejection(id, c, ReasonCode::DeferredRound));
                acc.reject(ReasonCode::DeferredRound);
            }
            continue;
        }
        if suppressed[i] {
            out.rejections.push(rejection(id, c, ReasonCode::Suppressed));
            acc.reject(ReasonCode::Suppressed);
            continue;
        }
        match classify(&c.stats, &s.gates) {
            Verdict::TileAnchor => {
                let anchor = AnchorRef {
                    pass: c.anchor.pass_index,
                    index: c.anchor_index,
                };
                out.tiles
                    .push(extract_target_tile(id, &c.anchor.bbox, Some(anchor), ps.dims, s.tiling.scale));
            }
            Verdict::Rejected(reason) => {
                out.rejections.push(rejection(id, c, reason));
                acc.reject(reason);
            }
            Verdict::PseudoLabel => unreachable!("gate-passing clusters are selected or suppressed"),
        }
    }
    acc.n_pseudo_labels = out.pseudo_labels.len();
    acc.n_tile_anchors = out.tiles.len();
    if s.gates.variant == Variant::SsalDagger && full_image_draw(s.full_image_seed(), id, s.tiling.full_image_prob) {
        out.tiles.push(full_image_tile(id, ps.dims));
        acc.n_full_image_tiles = 1;
    }

    if let Some(gts) = &input.ground_truth {
        acc.n_images_with_gt = 1;
        let (hits, total) = pseudo_label_hits(&emitted, gts, s.iou_threshold);
        acc.pl_hits = hits;
        acc.pl_checked = total;
        let boxes: Vec<ScoredBox> = kept.iter().map(scored).collect();
        for (i, m) in match_for_calibration(&boxes, gts, s.iou_threshold).iter().enumerate() {
            acc.ece_all.add(m);
            if selected[i] {
                acc.ece_selected.add(m);
            }
        }
        let anchored = || out.tiles.iter().filter(|t| t.kind == TileKind::TargetUncertain);
        acc.tiles_checked = anchored().count();
        acc.tiles_on_object = anchored()
            .filter(|t| {
                gts.iter().any(|g| {
                    let (x, y) = g.bbox.center();
                    t.region.contains_point(x, y)
                })
            })
            .count();
    }
    debug_assert_eq!(
        out.pseudo_labels.len() + acc.n_tile_anchors + out.rejections.len(),
        acc.n_detections
    );
    (out, acc)
}

/// Receives per-image results as a round streams through its input.
pub trait RoundSink {
    fn image(&mut self, out: &ImageOutput) -> Result<()>;
    fn schema_invalid(&mut self, rejection: &RejectionRecord) -> Result<()>;
}

/// Keeps everything in memory.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub images: Vec<ImageOutput>,
    pub schema_rejections: Vec<RejectionRecord>,
}

impl CollectSink {
    pub fn pseudo_labels(&self) -> impl Iterator<Item = &PseudoLabelRecord> {
        self.images.iter().flat_map(|i| &i.pseudo_labels)
    }

    pub fn tiles(&self) -> impl Iterator<Item = &TileSpec> {
        self.images.iter().flat_map(|i| &i.tiles)
    }
}

impl RoundSink for CollectSink {
    fn image(&mut self, out: &ImageOutput) -> Result<()> {
        self.images.push(out.clone());
        Ok(())
    }

    fn schema_invalid(&mut self, rejection: &RejectionRecord) -> Result<()> {
        self.schema_rejections.push(rejection.clone());
        Ok(())
    }
}

/// Writes the pseudo-label, tile and rejection manifests.
pub struct ManifestSink<W: Write> {
    pub pseudo_labels: RecordWriter<W>,
    pub tiles: RecordWriter<W>,
    pub rejections: RecordWriter<W>,
}

impl<W: Write> ManifestSink<W> {
    pub fn new(pseudo_labels: W, tiles: W, rejections: W) -> Self {
        Self {
            pseudo_labels: RecordWriter::new(pseudo_labels),
            tiles: RecordWriter::new(tiles),
            rejections: RecordWriter::new(rejections),
        }
    }

    pub fn finish(self) -> Result<()> {
        self.pseudo_labels.finish()?;
        self.tiles.finish()?;
        self.rejections.finish()?;
        Ok(())
    }
}

impl<W: Write> RoundSink for ManifestSink<W> {
    fn image(&mut self, out: &ImageOutput) -> Result<()> {
        out.pseudo_labels.iter().try_for_each(|r| self.pseudo_labels.write(r))?;
        out.tiles.iter().try_for_each(|r| self.tiles.write(r))?;
        out.rejections.iter().try_for_each(|r| self.rejections.write(r))
    }

    fn schema_invalid(&mut self, rejection: &RejectionRecord) -> Result<()> {
        self.rejections.write(rejection)
    }
}

/// Streams `inputs` through [`process_image`]; unreadable records become
/// schema-invalid rejections. Memory is bounded by one image at a time.
pub fn run_round<I, S>(inputs: I, s: &RoundSettings, sink: &mut S) -> Result<RoundReport>
where
    I: IntoIterator<Item = std::result::Result<ImageInput, BadLine>>,
    S: RoundSink + ?Sized,
{
    s.gates.validate()?;
    s.tiling.validate()?;
    let mut acc = RoundAccumulator::new(s.ece_bins);
    for input in inputs {
        match input {
            Ok(input) => {
                let (out, image_acc) = process_image(&input, s);
                sink.image(&out)?;
                acc.merge(&image_acc);
            }
            Err(bad) => {
                sink.schema_invalid(&schema_rejection(&bad))?;
                acc.reject(ReasonCode::SchemaInvalid);
            }
        }
    }
    Ok(acc.report(s.round, s.gates.variant))
}

/// Processes in-memory images on `threads` workers. Results and accumulator
/// merges follow input order, so the outcome equals [`run_round`]'s.
pub fn run_round_parallel(
    inputs: &[ImageInput],
    s: &RoundSettings,
    threads: usize,
) -> Result<(Vec<ImageOutput>, RoundReport)> {
    s.gates.validate()?;
    s.tiling.validate()?;
    let threads = threads.max(1);
    let chunk = inputs.len().div_ceil(threads).max(1);
    let parts: Vec<Vec<(ImageOutput, RoundAccumulator)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|i| process_image(i, s)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut acc = RoundAccumulator::new(s.ece_bins);
    let mut outputs = Vec::with_capacity(inputs.len());
    for (out, image_acc) in parts.into_iter().flatten() {
        acc.merge(&image_acc);
        outputs.push(out);
    }
    Ok((outputs, acc.report(s.round, s.gates.variant)))
}

/// Simulated scene `index` observed by the detector of `round`.
pub fn simulated_image(cfg: &Config, round: Round, index: u64) -> Result<ImageInput> {
    let scene = generate_scene(&cfg.scene_config(), index)?;
    let model = round_schedule(&cfg.simulator.detector, round.index(), cfg.simulator.round_decay);
    let seed = derive_seed_indexed(derive_seed(cfg.seed, "passes"), index);
    let passes = simulate_passes(&scene, &model, cfg.gates.n_passes, seed)?;
    Ok(ImageInput {
        passes,
        ground_truth: Some(scene.objects),
    })
}

/// `cfg.simulator.n_scenes` simulated images, generated lazily.
pub fn simulated_inputs(cfg: &Config, round: Round) -> impl Iterator<Item = Result<ImageInput>> + '_ {
    (0..cfg.simulator.n_scenes as u64).map(move |i| simulated_image(cfg, round, i))
}

/// A pseudo-label selection rule compared by [`compare_strategies`].
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Consensus gates with the given configuration.
    Gates { name: String, gates: GateConfig },
    /// The most confident single-pass detections, as many as an earlier
    /// row selected. Equivalent to `conf >= tau` for the implied `tau`.
    Confidence { name: String, match_row: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub name: String,
    pub n_selected: usize,
    pub precision: Option<f64>,
    pub ece: Option<f64>,
    /// Confidence cut-off of a confidence-ranked row.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_images: usize,
    pub rows: Vec<StrategyRow>,
}

impl ComparisonReport {
    pub fn row(&self, name: &str) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>9} {:>11} {:>8} {:>9}", "strategy", "selected", "precision %", "ece", "threshold");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:>9} {:>11} {:>8} {:>9}",
                r.name,
                r.n_selected,
                opt(r.precision, 2),
                opt(r.ece, 4),
                opt(r.threshold, 4)
            );
        }
        s
    }
}

fn row_from(name: &str, picks: &[(f64, bool)], bins: usize, threshold: Option<f64>) -> StrategyRow {
    let mut tally = CalibrationTally::new(bins);
    let mut hits = 0;
    for &(confidence, correct) in picks {
        tally.add(&crate::calibration::MatchedDetection { confidence, correct });
        hits += correct as usize;
    }
    StrategyRow {
        name: name.to_string(),
        n_selected: picks.len(),
        precision: (!picks.is_empty()).then(|| 100.0 * hits as f64 / picks.len() as f64),
        ece: tally.report().ok().map(|r| r.ece),
        threshold,
    }
}

/// Precision and ECE of each strategy's selections on images with ground
/// truth. Gate rows score anchors by anchor confidence; confidence rows rank
/// the first pass of every image.
pub fn compare_strategies(
    images: &[(PassSet, Vec<GroundTruth>)],
    strategies: &[Strategy],
    iou_threshold: f64,
    ece_bins: usize,
) -> Result<ComparisonReport> {
    let mut pool: Option<Vec<(f64, bool)>> = None;
    let mut rows: Vec<StrategyRow> = Vec::new();
    for strategy in strategies {
        let row = match strategy {
            Strategy::Gates { name, gates } => {
                gates.validate()?;
                let mut picks = Vec::new();
                for (ps, gts) in images {
                    let clusters = build_consensus(ps, &gates.consensus_params());
                    let selected = select_pseudo_label_indices(&clusters, gates).selected;
                    let boxes: Vec<ScoredBox> = selected.iter().map(|&i| scored(&clusters[i])).collect();
                    let matched = greedy_match(&boxes, gts, iou_threshold);
                    picks.extend(boxes.iter().zip(matched).map(|(b, m)| (b.confidence, m.is_some())));
                }
                row_from(name, &picks, ece_bins, None)
            }
            Strategy::Confidence { name, match_row } => {
                let k = rows
                    .get(*match_row)
                    .ok_or_else(|| Error::Config(format!("{name}: no row {match_row} to match")))?
                    .n_selected;
                let pool = pool.get_or_insert_with(|| confidence_pool(images, iou_threshold));
                let k = k.min(pool.len());
                let threshold = k.checked_sub(1).map(|i| pool[i].0);
                row_from(name, &pool[..k], ece_bins, threshold)
            }
        };
        rows.push(row);
    }
    Ok(ComparisonReport {
        n_images: images.len(),
        rows,
    })
}

/// First-pass detections of every image, most confident first, with their
/// correctness. Ties keep image and detection order.
fn confidence_pool(images: &[(PassSet, Vec<GroundTruth>)], iou_threshold: f64) -> Vec<(f64, bool)> {
    let mut pool = Vec::new();
    for (ps, gts) in images {
        let Some(first) = ps.passes.first() else { continue };
        let boxes: Vec<ScoredBox> = first
            .iter()
            .map(|d| ScoredBox {
                bbox: d.bbox,
                class_id: d.class_id,
                confidence: d.confidence,
            })
            .collect();
        let matched = greedy_match(&boxes, gts, iou_threshold);
        pool.extend(boxes.iter().zip(matched).map(|(b, m)| (b.confidence, m.is_some())));
    }
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    pool
}

/// SSAL and SSAL-dagger gates against confidence ranking at matched counts.
pub fn compare_variants(
    images: &[(PassSet, Vec<GroundTruth>)],
    base: &GateConfig,
    iou_threshold: f64,
    ece_bins: usize,
) -> Result<ComparisonReport> {
    let strategies = [
        Strategy::Gates {
            name: "ssal".into(),
            gates: GateConfig {
                variant: Variant::Ssal,
                ..*base
            },
        },
        Strategy::Gates {
            name: "ssal-dagger".into(),
            gates: GateConfig {
                variant: Variant::SsalDagger,
                ..*base
            },
        },
        Strategy::Confidence {
            name: "confidence@ssal".into(),
            match_row: 0,
        },
        Strategy::Confidence {
            name: "confidence@ssal-dagger".into(),
            match_row: 1,
        },
    ];
    compare_strategies(images, &strategies, iou_threshold, ece_bins)
}

/// Number of tiles of `kind`.
pub fn count_kind<'a>(tiles: impl IntoIterator<Item = &'a TileSpec>, kind: TileKind) -> usize {
    tiles.into_iter().filter(|t| t.kind == kind).count()
}
