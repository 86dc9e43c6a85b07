//! Average precision with all-point interpolation, size-stratified AP and
//! pseudo-label precision.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::gates::PseudoLabel;
use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    /// By the longer side: below 32 px small, above 96 px large.
    pub fn of(b: &BBox) -> SizeClass {
        let side = b.max_side();
        if side < 32.0 {
            SizeClass::Small
        } else if side <= 96.0 {
            SizeClass::Medium
        } else {
            SizeClass::Large
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
}

impl GroundTruth {
    pub fn new(bbox: BBox, class_id: u32) -> Self {
        Self { bbox, class_id }
    }

    pub fn size_class(&self) -> SizeClass {
        SizeClass::of(&self.bbox)
    }
}

/// A detection to be scored: box, class and ranking confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
    pub confidence: f64,
}

/// Greedy one-to-one matching in descending confidence. Each detection takes
/// the unmatched same-class ground truth of highest IoU, if that IoU reaches
/// `iou_thr`. Returns the matched ground-truth index per detection.
pub fn greedy_match(dets: &[ScoredBox], gts: &[GroundTruth], iou_thr: f64) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let mut out = vec![None; dets.len()];
    for i in order {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] || g.class_id != d.class_id {
                continue;
            }
            let o = iou(&d.bbox, &g.bbox);
            if o >= iou_thr && best.is_none_or(|(_, b)| o > b) {
                best = Some((j, o));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            out[i] = Some(j);
        }
    }
    out
}

/// Detections and ground truth of one image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageEval {
    pub detections: Vec<ScoredBox>,
    pub ground_truths: Vec<GroundTruth>,
}

/// Area under the precision envelope: `sum (r_i - r_{i-1}) * max_{j >= i} p_j`.
pub fn interpolated_area(flags: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(flags.len());
    for (k, &hit) in flags.iter().enumerate() {
        tp += hit as usize;
        points.push((tp as f64 / n_gt as f64, tp as f64 / (k + 1) as f64));
    }
    let mut envelope = 0.0f64;
    for p in points.iter_mut().rev() {
        envelope = envelope.max(p.1);
        p.1 = envelope;
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    area
}

/// AP of one class, optionally restricted to one size stratum.
///
/// Within a stratum, detections matched to ground truth of another stratum
/// are ignored, and unmatched detections only count as false positives when
/// their own size falls in the stratum. `None` when no ground truth of the
/// class (and stratum) exists.
pub fn stratified_average_precision(
    images: &[ImageEval],
    iou_thr: f64,
    class_id: u32,
    stratum: Option<SizeClass>,
) -> Option<f64> {
    let in_stratum = |b: &BBox| stratum.is_none_or(|s| SizeClass::of(b) == s);
    let mut scored: Vec<(f64, usize, usize, bool)> = Vec::new();
    let mut n_gt = 0usize;
    for (img_idx, img) in images.iter().enumerate() {
        let gts: Vec<GroundTruth> = img.ground_truths.iter().filter(|g| g.class_id == class_id).copied().collect();
        let dets: Vec<ScoredBox> = img.detections.iter().filter(|d| d.class_id == class_id).copied().collect();
        n_gt += gts.iter().filter(|g| in_stratum(&g.bbox)).count();
        for (k, m) in greedy_match(&dets, &gts, iou_thr).into_iter().enumerate() {
            let counted = match m {
                Some(j) => in_stratum(&gts[j].bbox).then_some(true),
                None => in_stratum(&dets[k].bbox).then_some(false),
            };
            if let Some(hit) = counted {
                scored.push((dets[k].confidence, img_idx, k, hit));
            }
        }
    }
    if n_gt == 0 {
        return None;
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let flags: Vec<bool> = scored.iter().map(|s| s.3).collect();
    Some(interpolated_area(&flags, n_gt))
}

pub fn average_precision(images: &[ImageEval], iou_thr: f64, class_id: u32) -> Option<f64> {
    stratified_average_precision(images, iou_thr, class_id, None)
}

fn gt_classes(images: &[ImageEval]) -> BTreeSet<u32> {
    images
        .iter()
        .flat_map(|i| i.ground_truths.iter().map(|g| g.class_id))
        .collect()
}

/// Mean AP over classes with ground truth (in the stratum, if given).
pub fn mean_average_precision(images: &[ImageEval], iou_thr: f64, stratum: Option<SizeClass>) -> Option<f64> {
    let aps: Vec<f64> = gt_classes(images)
        .into_iter()
        .filter_map(|c| stratified_average_precision(images, iou_thr, c, stratum))
        .collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap50_per_class: BTreeMap<u32, f64>,
    pub ap75_per_class: BTreeMap<u32, f64>,
    pub map50: Option<f64>,
    pub map75: Option<f64>,
    /// mAP averaged over IoU 0.50:0.05:0.95.
    pub ap_mean: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub pl_precision: Option<f64>,
}

pub fn map_report(images: &[ImageEval]) -> EvalReport {
    let per_class = |thr: f64| -> BTreeMap<u32, f64> {
        gt_classes(images)
            .into_iter()
            .filter_map(|c| average_precision(images, thr, c).map(|ap| (c, ap)))
            .collect()
    };
    let sweep: Vec<f64> = coco_thresholds()
        .into_iter()
        .filter_map(|t| mean_average_precision(images, t, None))
        .collect();
    EvalReport {
        ap50_per_class: per_class(0.5),
        ap75_per_class: per_class(0.75),
        map50: mean_average_precision(images, 0.5, None),
        map75: mean_average_precision(images, 0.75, None),
        ap_mean: (!sweep.is_empty()).then(|| sweep.iter().sum::<f64>() / sweep.len() as f64),
        ap_small: mean_average_precision(images, 0.5, Some(SizeClass::Small)),
        ap_medium: mean_average_precision(images, 0.5, Some(SizeClass::Medium)),
        ap_large: mean_average_precision(images, 0.5, Some(SizeClass::Large)),
        pl_precision: None,
    }
}

/// Correct and total pseudo-label counts for one image.
pub fn pseudo_label_hits(pls: &[PseudoLabel], gts: &[GroundTruth], iou_thr: f64) -> (usize, usize) {
    let as_scored: Vec<ScoredBox> = pls
        .iter()
        .map(|p| ScoredBox {
            bbox: p.bbox,
            class_id: p.class_id,
            confidence: p.p_hat,
        })
        .collect();
    let hits = greedy_match(&as_scored, gts, iou_thr).iter().filter(|m| m.is_some()).count();
    (hits, pls.len())
}

/// Percentage of pseudo-labels matched one-to-one to a same-class ground
/// truth at `iou_thr`; `None` without pseudo-labels.
pub fn pseudo_label_precision(pls: &[PseudoLabel], gts: &[GroundTruth], iou_thr: f64) -> Option<f64> {
    let (hits, total) = pseudo_label_hits(pls, gts, iou_thr);
    (total > 0).then(|| 100.0 * hits as f64 / total as f64)
}
