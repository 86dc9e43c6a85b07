//! Cross-pass consensus over Monte-Carlo dropout inferences.
//!
//! For every detection (the anchor) we collect the detections of the other
//! stochastic passes that cover the same region with the same class, then
//! summarize them into mean confidence, confidence variance, localization
//! instability and detection consistency.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox, ImageDims};

/// One predicted object in one inference pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
    pub confidence: f64,
    pub pass_index: usize,
}

impl Detection {
    pub fn new(bbox: BBox, class_id: u32, confidence: f64, pass_index: usize) -> Result<Self> {
        let det = Self {
            bbox,
            class_id,
            confidence,
            pass_index,
        };
        det.validate()?;
        Ok(det)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::Domain(format!(
                "detection confidence {} outside (0, 1]",
                self.confidence
            )));
        }
        if self.class_id == 0 {
            return Err(Error::Domain("class ids start at 1".into()));
        }
        Ok(())
    }
}

/// All detections of one image across `N` stochastic forward passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSet {
    pub image_id: String,
    pub dims: ImageDims,
    pub passes: Vec<Vec<Detection>>,
}

impl PassSet {
    pub fn new(image_id: impl Into<String>, dims: ImageDims, passes: Vec<Vec<Detection>>) -> Result<Self> {
        let set = Self {
            image_id: image_id.into(),
            dims,
            passes,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes.is_empty() {
            return Err(Error::Schema(format!("image {}: zero passes", self.image_id)));
        }
        for (k, pass) in self.passes.iter().enumerate() {
            for det in pass {
                det.validate()?;
                if det.pass_index != k {
                    return Err(Error::Schema(format!(
                        "image {}: detection with pass_index {} listed under pass {k}",
                        self.image_id, det.pass_index
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_passes(&self) -> usize {
        self.passes.len()
    }

    pub fn n_detections(&self) -> usize {
        self.passes.iter().map(Vec::len).sum()
    }

    pub fn detections(&self) -> impl Iterator<Item = &Detection> {
        self.passes.iter().flatten()
    }

    /// Reorders the passes, rewriting every `pass_index` to its new position.
    pub fn permuted(&self, order: &[usize]) -> PassSet {
        let passes = order
            .iter()
            .enumerate()
            .map(|(new_k, &old_k)| {
                self.passes[old_k]
                    .iter()
                    .map(|d| Detection {
                        pass_index: new_k,
                        ..*d
                    })
                    .collect()
            })
            .collect();
        PassSet {
            image_id: self.image_id.clone(),
            dims: self.dims,
            passes,
        }
    }
}

/// Parameters of the cross-pass matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusParams {
    /// Strict IoU threshold for two boxes to cover the same object.
    pub gamma: f64,
    /// Fold the anchor's own confidence into the mean and variance.
    pub include_anchor: bool,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            include_anchor: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub detection: Detection,
    pub iou_with_anchor: f64,
}

/// Summary statistics of a consensus cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStats {
    /// Mean member confidence.
    pub p_hat: f64,
    /// Population variance of member confidences.
    pub s2: f64,
    /// One minus the mean member IoU with the anchor.
    pub l_hat: f64,
    /// Number of foreign passes that re-detected the anchor.
    pub consistency: usize,
    /// `consistency / (N - 1)`; zero for single-pass sets.
    pub consistency_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusCluster {
    pub anchor: Detection,
    /// Position of the anchor inside its pass.
    pub anchor_index: usize,
    pub members: Vec<Member>,
    pub stats: UncertaintyStats,
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

// Values are summed in sorted order so the result does not depend on the
// order in which passes were listed.
fn mean_of(values: &[f64]) -> f64 {
    let v = sorted(values.to_vec());
    v.iter().sum::<f64>() / v.len() as f64
}

fn population_variance(values: &[f64]) -> f64 {
    if values.len() <= 1 {
        return 0.0;
    }
    let mean = mean_of(values);
    let sq: Vec<f64> = values.iter().map(|p| (p - mean) * (p - mean)).collect();
    sorted(sq).iter().sum::<f64>() / values.len() as f64
}

/// Mean confidence of the members; the anchor's confidence when there are none.
pub fn mean_confidence(cluster: &ConsensusCluster) -> f64 {
    if cluster.members.is_empty() {
        return cluster.anchor.confidence;
    }
    let confs: Vec<f64> = cluster.members.iter().map(|m| m.detection.confidence).collect();
    mean_of(&confs)
}

/// Population variance of member confidences, zero for at most one member.
pub fn confidence_variance(cluster: &ConsensusCluster) -> f64 {
    let confs: Vec<f64> = cluster.members.iter().map(|m| m.detection.confidence).collect();
    population_variance(&confs)
}

/// `1 - mean(member IoU with anchor)`, zero for an empty member set.
pub fn localization_instability(cluster: &ConsensusCluster) -> f64 {
    if cluster.members.is_empty() {
        return 0.0;
    }
    let ious: Vec<f64> = cluster.members.iter().map(|m| m.iou_with_anchor).collect();
    1.0 - mean_of(&ious)
}

impl UncertaintyStats {
    pub fn compute(anchor: &Detection, members: &[Member], n_passes: usize, include_anchor: bool) -> Self {
        let mut confs: Vec<f64> = members.iter().map(|m| m.detection.confidence).collect();
        if include_anchor {
            confs.push(anchor.confidence);
        }
        let (p_hat, s2) = if confs.is_empty() {
            (anchor.confidence, 0.0)
        } else {
            (mean_of(&confs), population_variance(&confs))
        };
        let l_hat = if members.is_empty() {
            0.0
        } else {
            let ious: Vec<f64> = members.iter().map(|m| m.iou_with_anchor).collect();
            1.0 - mean_of(&ious)
        };
        let consistency = members.len();
        let consistency_frac = if n_passes > 1 {
            consistency as f64 / (n_passes - 1) as f64
        } else {
            0.0
        };
        Self {
            p_hat,
            s2,
            l_hat,
            consistency,
            consistency_frac,
        }
    }
}

/// Orders candidate matches within one pass: higher IoU first, then higher
/// confidence, then lexicographically smaller box.
fn candidate_cmp(a: (&Detection, f64), b: (&Detection, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| b.0.confidence.total_cmp(&a.0.confidence))
        .then_with(|| a.0.bbox.lex_cmp(&b.0.bbox))
}

fn cluster_for(anchor: &Detection, anchor_index: usize, passes: &PassSet, params: &ConsensusParams) -> ConsensusCluster {
    let mut members = Vec::new();
    for (k, pass) in passes.passes.iter().enumerate() {
        if k == anchor.pass_index {
            continue;
        }
        let best = pass
            .iter()
            .filter(|d| d.class_id == anchor.class_id)
            .map(|d| (d, iou(&anchor.bbox, &d.bbox)))
            .filter(|&(_, o)| o > params.gamma)
            .min_by(|&a, &b| candidate_cmp(a, b));
        if let Some((det, o)) = best {
            members.push(Member {
                detection: *det,
                iou_with_anchor: o,
            });
        }
    }
    let stats = UncertaintyStats::compute(anchor, &members, passes.n_passes(), params.include_anchor);
    ConsensusCluster {
        anchor: *anchor,
        anchor_index,
        members,
        stats,
    }
}

/// Builds the consensus cluster of `anchor`: at most one same-class detection
/// per foreign pass, the one with the highest IoU above `gamma`.
pub fn match_cluster(anchor: &Detection, passes: &PassSet, params: &ConsensusParams) -> Result<ConsensusCluster> {
    let anchor_index = passes
        .passes
        .get(anchor.pass_index)
        .and_then(|pass| pass.iter().position(|d| d == anchor))
        .ok_or(Error::AnchorNotFound)?;
    Ok(cluster_for(anchor, anchor_index, passes, params))
}

/// Ranking used when duplicate clusters of one object compete: higher
/// consistency, then higher anchor confidence, then higher `p_hat`, then the
/// lexicographically smaller anchor box and class. None of the keys depend
/// on pass order.
pub fn cluster_rank(a: &ConsensusCluster, b: &ConsensusCluster) -> Ordering {
    b.stats.consistency.cmp(&a.stats.consistency)
        .then_with(|| b.anchor.confidence.total_cmp(&a.anchor.confidence))
        .then_with(|| b.stats.p_hat.total_cmp(&a.stats.p_hat))
        .then_with(|| a.anchor.bbox.lex_cmp(&b.anchor.bbox))
        .then_with(|| a.anchor.class_id.cmp(&b.anchor.class_id))
}

/// Clusters every detection and keeps one cluster per object. An anchor is
/// dropped when it matches an already kept, better ranked anchor: different
/// pass, same class, IoU > gamma. Detections of one pass never merge with
/// each other. Output is sorted by [`cluster_rank`].
pub fn build_consensus(passes: &PassSet, params: &ConsensusParams) -> Vec<ConsensusCluster> {
    let (kept, _) = build_consensus_with_duplicates(passes, params);
    kept
}

/// Like [`build_consensus`] but also returns the clusters that were merged
/// away, for bookkeeping.
pub fn build_consensus_with_duplicates(
    passes: &PassSet,
    params: &ConsensusParams,
) -> (Vec<ConsensusCluster>, Vec<ConsensusCluster>) {
    let mut all: Vec<ConsensusCluster> = passes
        .passes
        .iter()
        .flat_map(|pass| pass.iter().enumerate())
        .map(|(i, det)| cluster_for(det, i, passes, params))
        .collect();
    all.sort_by(cluster_rank);

    let mut kept: Vec<ConsensusCluster> = Vec::new();
    let mut dropped = Vec::new();
    for cluster in all {
        let duplicate = kept.iter().any(|k| {
            k.anchor.pass_index != cluster.anchor.pass_index
                && k.anchor.class_id == cluster.anchor.class_id
                && iou(&k.anchor.bbox, &cluster.anchor.bbox) > params.gamma
        });
        if duplicate {
            dropped.push(cluster);
        } else {
            kept.push(cluster);
        }
    }
    (kept, dropped)
}
