//! Detection-level expected calibration error.
//!
//! Correctness of a detection already folds in localization: a detection is
//! correct only when it is matched to a same-class ground truth at the match
//! IoU. Binning is over confidence alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{greedy_match, GroundTruth, ScoredBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedDetection {
    pub confidence: f64,
    pub correct: bool,
}

/// Marks each detection correct when greedy matching (descending confidence,
/// same class, IoU >= `iou_match`, each ground truth used once) pairs it with
/// a ground truth. Output follows input order.
pub fn match_for_calibration(dets: &[ScoredBox], gts: &[GroundTruth], iou_match: f64) -> Vec<MatchedDetection> {
    greedy_match(dets, gts, iou_match)
        .into_iter()
        .zip(dets)
        .map(|(m, d)| MatchedDetection {
            confidence: d.confidence,
            correct: m.is_some(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub total: usize,
    pub bins: Vec<CalibrationBin>,
}

/// Per-bin running sums. Merging is associative and commutative, so tallies
/// from independently processed images can be combined in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTally {
    counts: Vec<usize>,
    confidence_sums: Vec<f64>,
    correct: Vec<usize>,
}

fn bin_index(confidence: f64, n_bins: usize) -> usize {
    let idx = (confidence * n_bins as f64).ceil() as isize - 1;
    idx.clamp(0, n_bins as isize - 1) as usize
}

impl CalibrationTally {
    pub fn new(n_bins: usize) -> Self {
        let n = n_bins.max(1);
        Self {
            counts: vec![0; n],
            confidence_sums: vec![0.0; n],
            correct: vec![0; n],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, det: &MatchedDetection) {
        let i = bin_index(det.confidence, self.n_bins());
        self.counts[i] += 1;
        self.confidence_sums[i] += det.confidence;
        self.correct[i] += det.correct as usize;
    }

    pub fn merge(&mut self, other: &CalibrationTally) {
        assert_eq!(self.n_bins(), other.n_bins(), "bin layouts differ");
        for i in 0..self.n_bins() {
            self.counts[i] += other.counts[i];
            self.confidence_sums[i] += other.confidence_sums[i];
            self.correct[i] += other.correct[i];
        }
    }

    pub fn report(&self) -> Result<CalibrationReport> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyInput("calibration needs at least one detection"));
        }
        let n = self.n_bins() as f64;
        let mut ece = 0.0;
        let bins = (0..self.n_bins())
            .map(|i| {
                let count = self.counts[i];
                let (mean_confidence, accuracy) = if count > 0 {
                    (self.confidence_sums[i] / count as f64, self.correct[i] as f64 / count as f64)
                } else {
                    (0.0, 0.0)
                };
                ece += count as f64 / total as f64 * (accuracy - mean_confidence).abs();
                CalibrationBin {
                    lo: i as f64 / n,
                    hi: (i + 1) as f64 / n,
                    count,
                    mean_confidence,
                    accuracy,
                }
            })
            .collect();
        Ok(CalibrationReport { ece, total, bins })
    }
}

/// Equal-width bins on `(0, 1]`; ECE is the count-weighted mean absolute gap
/// between accuracy and mean confidence.
pub fn ece(matched: &[MatchedDetection], n_bins: usize) -> Result<CalibrationReport> {
    let mut tally = CalibrationTally::new(n_bins);
    matched.iter().for_each(|m| tally.add(m));
    tally.report()
}

/// ECE of everything and of the detections picked by `selector` (called with
/// the index into `matched`). An empty selection yields `None`.
pub fn ece_of_subset<F>(matched: &[MatchedDetection], selector: F, n_bins: usize) -> Result<(f64, Option<f64>)>
where
    F: Fn(usize) -> bool,
{
    let all = ece(matched, n_bins)?.ece;
    let picked: Vec<MatchedDetection> = matched
        .iter()
        .enumerate()
        .filter(|&(i, _)| selector(i))
        .map(|(_, m)| *m)
        .collect();
    let selected = if picked.is_empty() {
        None
    } else {
        Some(ece(&picked, n_bins)?.ece)
    };
    Ok((all, selected))
}
