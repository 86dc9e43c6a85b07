//! Boolean selection rules turning consensus statistics into pseudo-labels
//! (certain detections) and tile anchors (uncertain detections).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::consensus::{cluster_rank, ConsensusCluster, ConsensusParams, UncertaintyStats};
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Mean confidence + consistency for pseudo-labels, consistency-limited tiling.
    Ssal,
    /// Adds the variance bound to pseudo-labels and drops the consistency
    /// limit from tiling.
    #[default]
    SsalDagger,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ssal => "ssal",
            Variant::SsalDagger => "ssal-dagger",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssal" => Ok(Variant::Ssal),
            "ssal-dagger" | "ssal_dagger" => Ok(Variant::SsalDagger),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    /// Upper bound on confidence variance (inclusive).
    pub kappa0: f64,
    /// Confidence threshold separating certain from uncertain detections.
    pub kappa1: f64,
    /// Lower confidence limit below which detections count as clutter.
    pub kappa1_low: f64,
    /// Consistency threshold as a fraction of the foreign passes.
    pub kappa2: f64,
    pub n_passes: usize,
    /// IoU threshold for cross-pass matching and duplicate suppression.
    pub gamma: f64,
    pub variant: Variant,
    pub include_anchor: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            kappa0: 0.1,
            kappa1: 0.5,
            kappa1_low: 0.1,
            kappa2: 0.5,
            n_passes: 10,
            gamma: 0.5,
            variant: Variant::SsalDagger,
            include_anchor: false,
        }
    }
}

impl GateConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(0.0 <= self.kappa1_low && self.kappa1_low < self.kappa1 && self.kappa1 <= 1.0) {
            return bad("require 0 <= kappa1_low < kappa1 <= 1");
        }
        if !(self.kappa2 > 0.0 && self.kappa2 <= 1.0) {
            return bad("require 0 < kappa2 <= 1");
        }
        if self.kappa0.is_nan() || self.kappa0 <= 0.0 {
            return bad("require kappa0 > 0");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("require 0 < gamma < 1");
        }
        if self.n_passes == 0 {
            return bad("require n_passes >= 1");
        }
        Ok(())
    }

    pub fn consensus_params(&self) -> ConsensusParams {
        ConsensusParams {
            gamma: self.gamma,
            include_anchor: self.include_anchor,
        }
    }
}

/// Pseudo-label rule from mean confidence and consistency.
pub fn ugpl_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    stats.p_hat >= cfg.kappa1 && stats.consistency_frac >= cfg.kappa2
}

/// Pseudo-label rule that additionally bounds the confidence variance.
pub fn ugpl_dagger_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    stats.s2 <= cfg.kappa0 && ugpl_gate(stats, cfg)
}

/// Tile rule: mid-band confidence and low consistency.
pub fn ugt_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    ugt_dagger_gate(stats, cfg) && stats.consistency_frac < cfg.kappa2
}

/// Relaxed tile rule: mid-band confidence only.
pub fn ugt_dagger_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    cfg.kappa1_low <= stats.p_hat && stats.p_hat < cfg.kappa1
}

/// The pseudo-label gate of the configured variant.
pub fn pl_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    match cfg.variant {
        Variant::Ssal => ugpl_gate(stats, cfg),
        Variant::SsalDagger => ugpl_dagger_gate(stats, cfg),
    }
}

/// The tile gate of the configured variant.
pub fn tile_gate(stats: &UncertaintyStats, cfg: &GateConfig) -> bool {
    match cfg.variant {
        Variant::Ssal => ugt_gate(stats, cfg),
        Variant::SsalDagger => ugt_dagger_gate(stats, cfg),
    }
}

/// Why a detection was neither a pseudo-label nor a tile anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    /// Mean confidence below the lower limit.
    BelowLowerConfidence,
    /// Confident but not re-detected often enough.
    Inconsistent,
    /// Confident and consistent but the confidence variance is too high.
    HighVariance,
    /// Mid-band confidence but too consistent for consistency-limited tiling.
    ConsistentUncertain,
    /// Removed by same-class suppression among pseudo-labels.
    Suppressed,
    /// Covered by a better ranked cluster of the same object.
    Duplicate,
    /// Would be a pseudo-label, but the round emits tiles only.
    DeferredRound,
    /// The input record could not be parsed or failed validation.
    SchemaInvalid,
}

impl ReasonCode {
    pub const ALL: [ReasonCode; 8] = [
        ReasonCode::BelowLowerConfidence,
        ReasonCode::Inconsistent,
        ReasonCode::HighVariance,
        ReasonCode::ConsistentUncertain,
        ReasonCode::Suppressed,
        ReasonCode::Duplicate,
        ReasonCode::DeferredRound,
        ReasonCode::SchemaInvalid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReasonCode::BelowLowerConfidence => "below_lower_confidence",
            ReasonCode::Inconsistent => "inconsistent",
            ReasonCode::HighVariance => "high_variance",
            ReasonCode::ConsistentUncertain => "consistent_uncertain",
            ReasonCode::Suppressed => "suppressed",
            ReasonCode::Duplicate => "duplicate",
            ReasonCode::DeferredRound => "deferred_round",
            ReasonCode::SchemaInvalid => "schema_invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    PseudoLabel,
    TileAnchor,
    Rejected(ReasonCode),
}

/// Gate outcome for one cluster, before duplicate suppression.
pub fn classify(stats: &UncertaintyStats, cfg: &GateConfig) -> Verdict {
    if pl_gate(stats, cfg) {
        return Verdict::PseudoLabel;
    }
    if tile_gate(stats, cfg) {
        return Verdict::TileAnchor;
    }
    let reason = if stats.p_hat < cfg.kappa1_low {
        ReasonCode::BelowLowerConfidence
    } else if stats.p_hat >= cfg.kappa1 {
        if stats.consistency_frac < cfg.kappa2 {
            ReasonCode::Inconsistent
        } else {
            ReasonCode::HighVariance
        }
    } else {
        ReasonCode::ConsistentUncertain
    };
    Verdict::Rejected(reason)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
    pub p_hat: f64,
    pub s2: f64,
    pub consistency_frac: f64,
    /// Pass and in-pass index of the anchor detection.
    pub anchor_pass: usize,
    pub anchor_index: usize,
}

impl PseudoLabel {
    pub fn from_cluster(c: &ConsensusCluster) -> Self {
        Self {
            bbox: c.anchor.bbox,
            class_id: c.anchor.class_id,
            p_hat: c.stats.p_hat,
            s2: c.stats.s2,
            consistency_frac: c.stats.consistency_frac,
            anchor_pass: c.anchor.pass_index,
            anchor_index: c.anchor_index,
        }
    }
}

/// Result of pseudo-label selection over one image's clusters, as indices
/// into the input slice.
#[derive(Debug, Clone, Default)]
pub struct PseudoLabelSelection {
    pub selected: Vec<usize>,
    pub suppressed: Vec<usize>,
}

/// Order used by pseudo-label suppression: higher `p_hat`, then the
/// cluster ranking.
fn pseudo_label_rank(a: &ConsensusCluster, b: &ConsensusCluster) -> Ordering {
    b.stats.p_hat.total_cmp(&a.stats.p_hat).then_with(|| cluster_rank(a, b))
}

/// Gate, then greedy same-class suppression at IoU > gamma keeping the
/// cluster with higher `p_hat`.
pub fn select_pseudo_label_indices(clusters: &[ConsensusCluster], cfg: &GateConfig) -> PseudoLabelSelection {
    let mut passing: Vec<usize> = (0..clusters.len())
        .filter(|&i| pl_gate(&clusters[i].stats, cfg))
        .collect();
    passing.sort_by(|&a, &b| pseudo_label_rank(&clusters[a], &clusters[b]));

    let mut out = PseudoLabelSelection::default();
    for i in passing {
        let c = &clusters[i];
        let clash = out.selected.iter().any(|&k| {
            let kept = &clusters[k];
            kept.anchor.class_id == c.anchor.class_id && iou(&kept.anchor.bbox, &c.anchor.bbox) > cfg.gamma
        });
        if clash {
            out.suppressed.push(i);
        } else {
            out.selected.push(i);
        }
    }
    out
}

pub fn select_pseudo_labels(clusters: &[ConsensusCluster], cfg: &GateConfig) -> Vec<PseudoLabel> {
    select_pseudo_label_indices(clusters, cfg)
        .selected
        .into_iter()
        .map(|i| PseudoLabel::from_cluster(&clusters[i]))
        .collect()
}

/// Clusters passing the variant's tile gate and not its pseudo-label gate.
pub fn select_tile_anchors(clusters: &[ConsensusCluster], cfg: &GateConfig) -> Vec<ConsensusCluster> {
    clusters
        .iter()
        .filter(|c| tile_gate(&c.stats, cfg) && !pl_gate(&c.stats, cfg))
        .cloned()
        .collect()
}
