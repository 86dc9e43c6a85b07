//! Brute-force reference implementations and random miniature instances
//! shared by the integration and acceptance tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ugsel::consensus::{ConsensusCluster, Detection, PassSet};
use ugsel::eval::{GroundTruth, ImageEval, ScoredBox};
use ugsel::geometry::{BBox, ImageDims};

pub type Raw = [f64; 4];

pub fn iou_ref(a: Raw, b: Raw) -> f64 {
    let w = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let h = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = w * h;
    let area = |r: Raw| (r[2] - r[0]) * (r[3] - r[1]);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn lex_le(a: Raw, b: Raw) -> bool {
    for i in 0..4 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefCluster {
    pub pass: usize,
    pub index: usize,
    pub class_id: u32,
    pub bbox: Raw,
    pub confidence: f64,
    /// (pass, index) of each member, in pass order.
    pub members: Vec<(usize, usize)>,
    pub p_hat: f64,
    pub s2: f64,
    pub l_hat: f64,
    pub consistency: usize,
    pub consistency_frac: f64,
}

#[derive(Debug, Clone, Copy)]
struct Det {
    pass: usize,
    index: usize,
    class_id: u32,
    bbox: Raw,
    confidence: f64,
}

fn flatten(ps: &PassSet) -> Vec<Det> {
    let mut out = Vec::new();
    for (k, pass) in ps.passes.iter().enumerate() {
        for (i, d) in pass.iter().enumerate() {
            out.push(Det {
                pass: k,
                index: i,
                class_id: d.class_id,
                bbox: d.bbox.to_array(),
                confidence: d.confidence,
            });
        }
    }
    out
}

/// Every anchor's cluster, found by checking all candidate pairs.
pub fn all_clusters_ref(ps: &PassSet, gamma: f64) -> Vec<RefCluster> {
    let dets = flatten(ps);
    let n = ps.passes.len();
    dets.iter()
        .map(|a| {
            let mut members = Vec::new();
            let mut confs = Vec::new();
            let mut ious = Vec::new();
            for q in 0..n {
                if q == a.pass {
                    continue;
                }
                let cands: Vec<(&Det, f64)> = dets
                    .iter()
                    .filter(|d| d.pass == q && d.class_id == a.class_id)
                    .map(|d| (d, iou_ref(a.bbox, d.bbox)))
                    .filter(|&(_, o)| o > gamma)
                    .collect();
                // the winner beats or ties every other candidate
                let winner = cands.iter().find(|&&(c, oc)| {
                    cands.iter().all(|&(d, od)| {
                        oc > od
                            || (oc == od && c.confidence > d.confidence)
                            || (oc == od && c.confidence == d.confidence && lex_le(c.bbox, d.bbox))
                    })
                });
                if let Some(&(d, o)) = winner {
                    members.push((d.pass, d.index));
                    confs.push(d.confidence);
                    ious.push(o);
                }
            }
            let m = confs.len();
            let p_hat = if m == 0 { a.confidence } else { confs.iter().sum::<f64>() / m as f64 };
            let s2 = if m <= 1 {
                0.0
            } else {
                confs.iter().map(|c| (c - p_hat).powi(2)).sum::<f64>() / m as f64
            };
            let l_hat = if m == 0 { 0.0 } else { 1.0 - ious.iter().sum::<f64>() / m as f64 };
            RefCluster {
                pass: a.pass,
                index: a.index,
                class_id: a.class_id,
                bbox: a.bbox,
                confidence: a.confidence,
                members,
                p_hat,
                s2,
                l_hat,
                consistency: m,
                consistency_frac: if n > 1 { m as f64 / (n - 1) as f64 } else { 0.0 },
            }
        })
        .collect()
}

fn better(a: &RefCluster, b: &RefCluster) -> bool {
    let key = |c: &RefCluster| (c.consistency, c.confidence, c.p_hat);
    let (ka, kb) = (key(a), key(b));
    if ka.0 != kb.0 {
        return ka.0 > kb.0;
    }
    if ka.1 != kb.1 {
        return ka.1 > kb.1;
    }
    if ka.2 != kb.2 {
        return ka.2 > kb.2;
    }
    if a.bbox != b.bbox {
        return lex_le(a.bbox, b.bbox);
    }
    if a.class_id != b.class_id {
        return a.class_id < b.class_id;
    }
    (a.pass, a.index) < (b.pass, b.index)
}

fn conflict(a: &RefCluster, b: &RefCluster, gamma: f64) -> bool {
    a.pass != b.pass && a.class_id == b.class_id && iou_ref(a.bbox, b.bbox) > gamma
}

/// Kept clusters: a cluster survives unless a better surviving cluster from
/// another pass covers the same object. Returned in (pass, index) order.
pub fn consensus_ref(ps: &PassSet, gamma: f64) -> Vec<RefCluster> {
    let all = all_clusters_ref(ps, gamma);
    let n = all.len();
    let mut memo: Vec<Option<bool>> = vec![None; n];
    fn kept(i: usize, all: &[RefCluster], gamma: f64, memo: &mut Vec<Option<bool>>) -> bool {
        if let Some(k) = memo[i] {
            return k;
        }
        let mut survives = true;
        for j in 0..all.len() {
            if j != i && better(&all[j], &all[i]) && conflict(&all[j], &all[i], gamma) && kept(j, all, gamma, memo) {
                survives = false;
                break;
            }
        }
        memo[i] = Some(survives);
        survives
    }
    (0..n).filter(|&i| kept(i, &all, gamma, &mut memo)).map(|i| all[i].clone()).collect()
}

/// Compares a library cluster against a reference one: same anchor, same
/// member detections and statistics within `tol`.
pub fn same_cluster(ps: &PassSet, c: &ConsensusCluster, r: &RefCluster, tol: f64) -> Result<(), String> {
    let mut problems = Vec::new();
    if (c.anchor.pass_index, c.anchor_index) != (r.pass, r.index) {
        problems.push(format!("anchor {:?} vs {:?}", (c.anchor.pass_index, c.anchor_index), (r.pass, r.index)));
    }
    let got: Vec<Detection> = c.members.iter().map(|m| m.detection).collect();
    let want: Vec<Detection> = r.members.iter().map(|&(p, i)| ps.passes[p][i]).collect();
    if got != want {
        problems.push(format!("members {got:?} vs {want:?}"));
    }
    if c.stats.consistency != r.consistency {
        problems.push(format!("consistency {} vs {}", c.stats.consistency, r.consistency));
    }
    for (name, a, b) in [
        ("p_hat", c.stats.p_hat, r.p_hat),
        ("s2", c.stats.s2, r.s2),
        ("l_hat", c.stats.l_hat, r.l_hat),
        ("frac", c.stats.consistency_frac, r.consistency_frac),
    ] {
        if (a - b).abs() > tol {
            problems.push(format!("{name} {a} vs {b}"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join(", "))
    }
}

/// Runs the library and the reference on one pass set and reports the first
/// disagreement.
pub fn check_consensus(ps: &PassSet, gamma: f64, tol: f64) -> Result<(), String> {
    let params = ugsel::consensus::ConsensusParams {
        gamma,
        ..Default::default()
    };
    let mut got = ugsel::consensus::build_consensus(ps, &params);
    got.sort_by_key(|c| (c.anchor.pass_index, c.anchor_index));
    let want = consensus_ref(ps, gamma);
    if got.len() != want.len() {
        return Err(format!("{} kept clusters vs {} in the reference", got.len(), want.len()));
    }
    for (c, r) in got.iter().zip(&want) {
        same_cluster(ps, c, r, tol)?;
    }
    Ok(())
}

/// Random pass set on a small integer grid so that ties and overlaps are
/// frequent. Confidences are multiples of 1/16, which sum exactly.
pub fn random_pass_set(rng: &mut ChaCha8Rng, max_passes: usize, max_dets: usize) -> PassSet {
    let n_passes = rng.random_range(1..=max_passes);
    let n_dets = rng.random_range(0..=max_dets);
    let mut passes: Vec<Vec<Detection>> = vec![Vec::new(); n_passes];
    for _ in 0..n_dets {
        let k = rng.random_range(0..n_passes);
        let x1 = rng.random_range(0..12) as f64;
        let y1 = rng.random_range(0..12) as f64;
        let w = rng.random_range(1..8) as f64;
        let h = rng.random_range(1..8) as f64;
        let class_id = rng.random_range(1..=2);
        let conf = rng.random_range(1..=16) as f64 / 16.0;
        let d = Detection::new(BBox::new(x1, y1, x1 + w, y1 + h).unwrap(), class_id, conf, k).unwrap();
        passes[k].push(d);
    }
    PassSet::new("mini", ImageDims::new(20.0, 20.0).unwrap(), passes).unwrap()
}

/// AP of `class_id` from scratch: for every confidence threshold, rerun the
/// greedy matching on the detections at or above it, collect (recall,
/// precision) points, and integrate the monotone envelope.
pub fn average_precision_ref(images: &[ImageEval], iou_thr: f64, class_id: u32) -> Option<f64> {
    let n_gt: usize = images
        .iter()
        .map(|im| im.ground_truths.iter().filter(|g| g.class_id == class_id).count())
        .sum();
    if n_gt == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = images
        .iter()
        .flat_map(|im| im.detections.iter().filter(|d| d.class_id == class_id).map(|d| d.confidence))
        .collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut points: Vec<(f64, f64)> = Vec::new();
    for &t in &thresholds {
        let mut tp = 0;
        let mut total = 0;
        for im in images {
            let mut dets: Vec<&ScoredBox> = im
                .detections
                .iter()
                .filter(|d| d.class_id == class_id && d.confidence >= t)
                .collect();
            dets.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
            let gts: Vec<&GroundTruth> = im.ground_truths.iter().filter(|g| g.class_id == class_id).collect();
            let mut used = vec![false; gts.len()];
            for d in dets {
                total += 1;
                let mut best: Option<(usize, f64)> = None;
                for (j, g) in gts.iter().enumerate() {
                    let o = iou_ref(d.bbox.to_array(), g.bbox.to_array());
                    if !used[j] && o >= iou_thr && best.is_none_or(|(_, b)| o > b) {
                        best = Some((j, o));
                    }
                }
                if let Some((j, _)) = best {
                    used[j] = true;
                    tp += 1;
                }
            }
        }
        points.push((tp as f64 / n_gt as f64, tp as f64 / total as f64));
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for (i, &(r, _)) in points.iter().enumerate() {
        let p_max = points[i..].iter().map(|&(_, p)| p).fold(0.0, f64::max);
        ap += (r - prev) * p_max;
        prev = r;
    }
    Some(ap)
}

/// One or two images with up to five detections of distinct confidence.
pub fn random_eval_instance(rng: &mut ChaCha8Rng) -> Vec<ImageEval> {
    let n_images = rng.random_range(1..=2);
    let n_dets = rng.random_range(0..=5);
    let mut confs: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    for i in (1..confs.len()).rev() {
        confs.swap(i, rng.random_range(0..=i));
    }
    let mut images: Vec<ImageEval> = (0..n_images).map(|_| ImageEval::default()).collect();
    let rand_box = |rng: &mut ChaCha8Rng| {
        let x1 = rng.random_range(0..10) as f64;
        let y1 = rng.random_range(0..10) as f64;
        let w = rng.random_range(2..8) as f64;
        let h = rng.random_range(2..8) as f64;
        BBox::new(x1, y1, x1 + w, y1 + h).unwrap()
    };
    for im in images.iter_mut() {
        for _ in 0..rng.random_range(0..=3) {
            let class_id = rng.random_range(1..=2);
            im.ground_truths.push(GroundTruth::new(rand_box(rng), class_id));
        }
    }
    for c in confs.into_iter().take(n_dets) {
        let im = rng.random_range(0..n_images);
        // half the detections start from a ground truth so hits are common
        let bbox = match images[im].ground_truths.len() {
            n if n > 0 && rng.random_bool(0.5) => {
                let g = images[im].ground_truths[rng.random_range(0..n)].bbox;
                g.translate(rng.random_range(-1..=1) as f64, rng.random_range(-1..=1) as f64)
            }
            _ => rand_box(rng),
        };
        let class_id = rng.random_range(1..=2);
        images[im].detections.push(ScoredBox {
            bbox,
            class_id,
            confidence: c,
        });
    }
    images
}

/// Manifests and JSON report of one round written through the record sinks.
pub struct RunArtifacts {
    pub pseudo_labels: Vec<u8>,
    pub tiles: Vec<u8>,
    pub rejections: Vec<u8>,
    pub report: String,
}

pub fn simulated_run(cfg: &ugsel::config::Config, round: ugsel::pipeline::Round) -> RunArtifacts {
    use ugsel::pipeline::{run_round, simulated_inputs, ManifestSink, RoundSettings};
    let inputs: Vec<_> = simulated_inputs(cfg, round).map(|r| Ok(r.unwrap())).collect();
    let mut sink = ManifestSink::new(Vec::new(), Vec::new(), Vec::new());
    let report = run_round(inputs, &RoundSettings::from_config(cfg, round), &mut sink).unwrap();
    RunArtifacts {
        pseudo_labels: sink.pseudo_labels.finish().unwrap(),
        tiles: sink.tiles.finish().unwrap(),
        rejections: sink.rejections.finish().unwrap(),
        report: serde_json::to_string_pretty(&report).unwrap(),
    }
}

/// Pass sets with ground truth, as the comparison functions take them.
pub fn labelled_images(
    cfg: &ugsel::config::Config,
    round: ugsel::pipeline::Round,
) -> Vec<(PassSet, Vec<GroundTruth>)> {
    ugsel::pipeline::simulated_inputs(cfg, round)
        .map(|r| {
            let input = r.unwrap();
            (input.passes, input.ground_truth.unwrap())
        })
        .collect()
}

/// Reverses the pass order of every image.
pub fn reversed_passes(inputs: &[ugsel::pipeline::ImageInput]) -> Vec<ugsel::pipeline::ImageInput> {
    inputs
        .iter()
        .map(|i| {
            let order: Vec<usize> = (0..i.passes.n_passes()).rev().collect();
            ugsel::pipeline::ImageInput {
                passes: i.passes.permuted(&order),
                ground_truth: i.ground_truth.clone(),
            }
        })
        .collect()
}

/// Pass-order free description of a run's selections: pseudo-label boxes,
/// classes and mean confidences, and tile regions.
pub fn selection_signature(outputs: &[ugsel::pipeline::ImageOutput]) -> Vec<String> {
    let mut v = Vec::new();
    for out in outputs {
        for pl in &out.pseudo_labels {
            v.push(format!(
                "pl {} {:?} {} {:?}",
                out.image_id,
                pl.label.bbox.to_array(),
                pl.label.class_id,
                pl.label.p_hat
            ));
        }
        for t in &out.tiles {
            v.push(format!("tile {} {:?} {:?}", out.image_id, t.kind, t.region.to_array()));
        }
    }
    v.sort();
    v
}
