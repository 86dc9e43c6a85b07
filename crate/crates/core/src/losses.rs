//! Scalar evaluation of the detection, pseudo-label and adversarial losses on
//! supplied predictions. Nothing here computes gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

pub const FOCAL_ALPHA: f64 = 0.25;
pub const FOCAL_GAMMA: f64 = 2.0;

/// `-alpha * (1 - p_t)^gamma_f * ln(p_t)` for `p_t` in `(0, 1]`.
///
/// `p_t = 1` is accepted and evaluates to the limit 0.
pub fn focal_loss(p_t: f64, alpha: f64, gamma_f: f64) -> Result<f64> {
    if !(p_t > 0.0 && p_t <= 1.0) {
        return Err(Error::Domain(format!("focal loss needs p_t in (0, 1], got {p_t}")));
    }
    if p_t == 1.0 {
        return Ok(0.0);
    }
    Ok(-alpha * (1.0 - p_t).powf(gamma_f) * p_t.ln())
}

/// `-ln(IoU(pred, target))`; disjoint boxes are an error.
pub fn iou_loss(pred: &BBox, target: &BBox) -> Result<f64> {
    let o = iou(pred, target);
    if o <= 0.0 {
        return Err(Error::ZeroOverlap);
    }
    Ok(-o.ln())
}

/// Predictions at one feature-map location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationPrediction {
    /// Per-class probabilities, index `c - 1` for class id `c`.
    pub class_probs: Vec<f64>,
    #[serde(rename = "box")]
    pub bbox: BBox,
    /// Assigned class; `None` for background.
    pub target_class: Option<u32>,
    pub target_box: Option<BBox>,
}

impl LocationPrediction {
    pub fn is_positive(&self) -> bool {
        self.target_class.is_some()
    }
}

/// Sigmoid focal loss summed over classes: the target class is scored with
/// `p` and weight `alpha`, every other class with `1 - p` and `1 - alpha`.
fn location_focal(loc: &LocationPrediction, alpha: f64, gamma_f: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, &p) in loc.class_probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("class probability {p} outside [0, 1]")));
        }
        let is_target = loc.target_class == Some(i as u32 + 1);
        total += if is_target {
            focal_loss(p, alpha, gamma_f)?
        } else {
            focal_loss(1.0 - p, 1.0 - alpha, gamma_f)?
        };
    }
    Ok(total)
}

fn location_box_loss(loc: &LocationPrediction) -> Result<f64> {
    let target = loc
        .target_box
        .as_ref()
        .ok_or_else(|| Error::Domain("positive location without a target box".into()))?;
    iou_loss(&loc.bbox, target)
}

/// Classification loss over every location plus IoU loss over positive
/// locations, both normalized by the number of positives.
pub fn detection_loss(preds: &[LocationPrediction]) -> Result<f64> {
    let n_pos = preds.iter().filter(|p| p.is_positive()).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut cls = 0.0;
    let mut reg = 0.0;
    for loc in preds {
        cls += location_focal(loc, FOCAL_ALPHA, FOCAL_GAMMA)?;
        if loc.is_positive() {
            reg += location_box_loss(loc)?;
        }
    }
    Ok((cls + reg) / n_pos as f64)
}

/// Same structure as [`detection_loss`], but the classification term only
/// counts pseudo-label locations (those with a target class).
pub fn pseudo_label_loss(preds: &[LocationPrediction]) -> Result<f64> {
    let n_pos = preds.iter().filter(|p| p.is_positive()).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut total = 0.0;
    for loc in preds.iter().filter(|p| p.is_positive()) {
        total += location_focal(loc, FOCAL_ALPHA, FOCAL_GAMMA)?;
        total += location_box_loss(loc)?;
    }
    Ok(total / n_pos as f64)
}

/// Discriminator output over an `height x width` grid for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMap {
    pub height: usize,
    pub width: usize,
    /// Row-major probabilities that a cell comes from the source domain.
    pub probs: Vec<f64>,
    /// 1 for source, 0 for target.
    pub domain_label: u8,
}

impl DomainMap {
    pub fn new(height: usize, width: usize, probs: Vec<f64>, domain_label: u8) -> Result<Self> {
        if probs.len() != height * width {
            return Err(Error::Domain(format!(
                "domain map has {} cells, expected {height}x{width}",
                probs.len()
            )));
        }
        if domain_label > 1 {
            return Err(Error::Domain("domain label must be 0 or 1".into()));
        }
        Ok(Self {
            height,
            width,
            probs,
            domain_label,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64, domain_label: u8) -> Result<Self> {
        Self::new(height, width, vec![value; height * width], domain_label)
    }

    fn bce(&self) -> Result<f64> {
        let q = self.domain_label as f64;
        let mut total = 0.0;
        for &d in &self.probs {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Domain(format!("discriminator output {d} outside (0, 1)")));
            }
            total -= q * d.ln() + (1.0 - q) * (1.0 - d).ln();
        }
        Ok(total)
    }
}

/// Summed binary cross-entropy of the discriminator on a source map and a
/// target map.
pub fn domain_adv_loss(src: &DomainMap, tgt: &DomainMap) -> Result<f64> {
    if (src.height, src.width) != (tgt.height, tgt.width) {
        return Err(Error::Domain("source and target maps differ in shape".into()));
    }
    Ok(src.bce()? + tgt.bce()?)
}
