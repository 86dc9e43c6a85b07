//! Tile regions: squares around uncertain target detections, random large
//! crops of source images that keep at least one object, and whole images.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::Variant;
use crate::geometry::{expand_square, BBox, ImageDims};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileKind {
    TargetUncertain,
    SourceRandom,
    FullImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorRef {
    pub pass: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSpec {
    pub image_id: String,
    pub region: BBox,
    pub kind: TileKind,
    pub anchor: Option<AnchorRef>,
    pub scale_used: f64,
    /// Size a trainer should resize the crop to (the input image size).
    pub output_size: [f64; 2],
}

/// How a source tile must cover a ground-truth object to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    #[default]
    Center,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    /// Target tile side as a multiple of the anchor's longer side.
    pub scale: f64,
    pub min_area_frac: f64,
    pub max_attempts: usize,
    pub containment: Containment,
    /// Aspect jitter of source tiles relative to the image aspect.
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Per-image probability of appending a whole-image tile (dagger variant).
    pub full_image_prob: f64,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self {
            scale: 5.0,
            min_area_frac: 0.6,
            max_attempts: 100,
            containment: Containment::Center,
            aspect_min: 0.75,
            aspect_max: 4.0 / 3.0,
            full_image_prob: 0.25,
        }
    }
}

impl TilingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale.is_nan() || self.scale < 1.0 {
            return Err(Error::Config("tile scale must be >= 1".into()));
        }
        if !(self.min_area_frac > 0.0 && self.min_area_frac <= 1.0) {
            return Err(Error::Config("min_area_frac must lie in (0, 1]".into()));
        }
        if !(self.aspect_min > 0.0 && self.aspect_min <= self.aspect_max) {
            return Err(Error::Config("require 0 < aspect_min <= aspect_max".into()));
        }
        if !(0.0..=1.0).contains(&self.full_image_prob) {
            return Err(Error::Config("full_image_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn extract_target_tile(
    image_id: &str,
    anchor_box: &BBox,
    anchor: Option<AnchorRef>,
    dims: ImageDims,
    scale: f64,
) -> TileSpec {
    TileSpec {
        image_id: image_id.to_string(),
        region: expand_square(anchor_box, scale, dims),
        kind: TileKind::TargetUncertain,
        anchor,
        scale_used: scale,
        output_size: [dims.width, dims.height],
    }
}

pub fn full_image_tile(image_id: &str, dims: ImageDims) -> TileSpec {
    TileSpec {
        image_id: image_id.to_string(),
        region: dims.full_box(),
        kind: TileKind::FullImage,
        anchor: None,
        scale_used: 1.0,
        output_size: [dims.width, dims.height],
    }
}

fn covers(region: &BBox, gt: &BBox, containment: Containment) -> bool {
    match containment {
        Containment::Center => {
            let (cx, cy) = gt.center();
            region.contains_point(cx, cy)
        }
        Containment::Full => region.contains_box(gt),
    }
}

/// Draws one random crop size with area at least `min_area_frac` of the image.
fn draw_crop_size<R: Rng>(rng: &mut R, dims: ImageDims, cfg: &TilingConfig) -> Option<(f64, f64)> {
    let frac = if cfg.min_area_frac >= 1.0 {
        1.0
    } else {
        rng.random_range(cfg.min_area_frac..=1.0)
    };
    let aspect = if cfg.aspect_min < cfg.aspect_max {
        rng.random_range(cfg.aspect_min..=cfg.aspect_max)
    } else {
        cfg.aspect_min
    };
    let target_area = frac * dims.area();
    let mut w = (dims.width * (frac * aspect).sqrt()).min(dims.width);
    let mut h = (target_area / w).min(dims.height);
    if h * w < target_area {
        w = (target_area / h).min(dims.width);
        h = (target_area / w).min(dims.height);
    }
    // tolerate rounding at the full-image corner case
    (w * h >= cfg.min_area_frac * dims.area() * (1.0 - 1e-12)).then_some((w, h))
}

/// Samples a random crop covering at least `min_area_frac` of the image that
/// contains at least one ground-truth object. `None` after `max_attempts`
/// rejections or when there are no objects.
pub fn sample_source_tile_with<R: Rng>(
    rng: &mut R,
    image_id: &str,
    gt_boxes: &[BBox],
    dims: ImageDims,
    cfg: &TilingConfig,
) -> Option<TileSpec> {
    if gt_boxes.is_empty() {
        return None;
    }
    for _ in 0..cfg.max_attempts {
        let Some((w, h)) = draw_crop_size(rng, dims, cfg) else {
            continue;
        };
        let x1 = if dims.width - w > 0.0 {
            rng.random_range(0.0..=dims.width - w)
        } else {
            0.0
        };
        let y1 = if dims.height - h > 0.0 {
            rng.random_range(0.0..=dims.height - h)
        } else {
            0.0
        };
        let region = BBox::new(x1, y1, x1 + w, y1 + h).ok()?;
        if gt_boxes.iter().any(|g| covers(&region, g, cfg.containment)) {
            return Some(TileSpec {
                image_id: image_id.to_string(),
                region,
                kind: TileKind::SourceRandom,
                anchor: None,
                scale_used: w.max(h) / dims.width.max(dims.height),
                output_size: [dims.width, dims.height],
            });
        }
    }
    None
}

pub fn sample_source_tile(
    image_id: &str,
    gt_boxes: &[BBox],
    dims: ImageDims,
    seed: u64,
    cfg: &TilingConfig,
) -> Option<TileSpec> {
    let mut rng = rng_from_seed(seed);
    sample_source_tile_with(&mut rng, image_id, gt_boxes, dims, cfg)
}

/// Tiles gathered for one image before batching.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTiles {
    pub image_id: String,
    pub dims: ImageDims,
    pub target: Vec<TileSpec>,
    pub source: Vec<TileSpec>,
}

/// Whether the whole image joins the batch; one independent draw per image.
pub fn full_image_draw(seed: u64, image_id: &str, prob: f64) -> bool {
    if prob <= 0.0 {
        return false;
    }
    if prob >= 1.0 {
        return true;
    }
    let mut rng = rng_from_seed(derive_seed(seed, image_id));
    rng.random_bool(prob)
}

/// Target then source tiles of every image; the dagger variant appends a
/// whole-image tile to an image with probability `full_image_prob`.
pub fn assemble_tile_batch(images: &[ImageTiles], full_image_prob: f64, seed: u64, variant: Variant) -> Vec<TileSpec> {
    let mut out = Vec::new();
    for img in images {
        out.extend(img.target.iter().cloned());
        out.extend(img.source.iter().cloned());
        if variant == Variant::SsalDagger && full_image_draw(seed, &img.image_id, full_image_prob) {
            out.push(full_image_tile(&img.image_id, img.dims));
        }
    }
    out
}
