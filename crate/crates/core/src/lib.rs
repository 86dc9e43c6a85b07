//! Uncertainty-guided selection of pseudo-labels and adversarial tiles for
//! domain-adaptive object detection.
//!
//! Several stochastic inference passes over an image are fused into
//! consensus clusters. Confident, consistent clusters become pseudo-labels;
//! mid-confidence ones anchor tiles for feature alignment. A seeded
//! simulator supplies passes with known ground truth so every stage can be
//! measured.

pub mod calibration;
pub mod config;
pub mod consensus;
pub mod error;
pub mod eval;
pub mod gates;
pub mod geometry;
pub mod losses;
pub mod pipeline;
pub mod records;
pub mod seed;
pub mod sim;
pub mod tiling;

pub use error::{Error, Result};
