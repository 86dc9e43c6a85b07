//! Axis-aligned box arithmetic on continuous pixel coordinates.
//!
//! Areas use the open-interval convention (no `+1` pixel), so a box
//! `[0, 0, 10, 10]` has area 100.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x1, y1, x2, y2]` with `x1 <= x2` and `y1 <= y2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let finite = x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite();
        if !finite || x2 < x1 || y2 < y1 {
            return Err(Error::InvalidBox(x1, y1, x2, y2));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Box of the given size centered at `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self> {
        Self::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn max_side(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Closed containment test for a point.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x <= self.x2 && y >= self.y1 && y <= self.y2
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x1 >= self.x1 && other.y1 >= self.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        w * h
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// Multiplies every coordinate by `factor` (> 0).
    pub fn scale(&self, factor: f64) -> BBox {
        BBox {
            x1: self.x1 * factor,
            y1: self.y1 * factor,
            x2: self.x2 * factor,
            y2: self.y2 * factor,
        }
    }

    /// Total order on the corner coordinates, used as a tie-break key.
    pub fn lex_cmp(&self, other: &BBox) -> std::cmp::Ordering {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Image extent in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct ImageDims {
    pub width: f64,
    pub height: f64,
}

#[derive(Deserialize)]
struct RawDims {
    width: f64,
    height: f64,
}

impl TryFrom<RawDims> for ImageDims {
    type Error = Error;

    fn try_from(raw: RawDims) -> Result<Self> {
        ImageDims::new(raw.width, raw.height)
    }
}

impl ImageDims {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::InvalidDims(width, height));
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn full_box(&self) -> BBox {
        BBox {
            x1: 0.0,
            y1: 0.0,
            x2: self.width,
            y2: self.height,
        }
    }
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Clamps `b` into `[0, width] x [0, height]`. A box entirely outside the
/// image collapses onto the nearest border.
pub fn clip_box(b: &BBox, dims: ImageDims) -> BBox {
    let cx = |v: f64| v.clamp(0.0, dims.width);
    let cy = |v: f64| v.clamp(0.0, dims.height);
    BBox {
        x1: cx(b.x1),
        y1: cy(b.y1),
        x2: cx(b.x2),
        y2: cy(b.y2),
    }
}

/// Square of side `scale * max_side(b)` centered on `b`, shifted to lie inside
/// the image. When the side exceeds an image dimension it is capped at
/// `min(width, height)`.
pub fn expand_square(b: &BBox, scale: f64, dims: ImageDims) -> BBox {
    let side = (scale * b.max_side()).min(dims.width).min(dims.height);
    let (cx, cy) = b.center();
    let x1 = (cx - side / 2.0).clamp(0.0, dims.width - side);
    let y1 = (cy - side / 2.0).clamp(0.0, dims.height - side);
    BBox {
        x1,
        y1,
        x2: x1 + side,
        y2: y1 + side,
    }
}
