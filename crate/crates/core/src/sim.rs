//! Synthetic scenes and a stochastic detector standing in for Monte-Carlo
//! dropout inference under domain shift.
//!
//! Every random stream is derived from a master seed and a stable label, so a
//! scene and its passes are reproducible independently of how many other
//! scenes were generated or in which order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::consensus::{Detection, PassSet};
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::geometry::{clip_box, BBox, ImageDims};
use crate::seed::{derive_seed, derive_seed_indexed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub width: f64,
    pub height: f64,
    pub n_objects_min: usize,
    pub n_objects_max: usize,
    pub n_classes: u32,
    /// Longer object side is log-uniform in `[min_side, max_side]`.
    pub min_side: f64,
    pub max_side: f64,
    /// Height over width of an object.
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub allow_overlap: bool,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
    /// Stream seed; set from the master seed rather than read from files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 1024.0,
            height: 512.0,
            n_objects_min: 3,
            n_objects_max: 10,
            n_classes: 3,
            min_side: 12.0,
            max_side: 220.0,
            aspect_min: 0.5,
            aspect_max: 2.0,
            allow_overlap: false,
            max_attempts: 500,
            seed: 7,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        ImageDims::new(self.width, self.height)?;
        if self.n_objects_min > self.n_objects_max {
            return Err(Error::Config("n_objects_min exceeds n_objects_max".into()));
        }
        if self.n_classes == 0 {
            return Err(Error::Config("need at least one class".into()));
        }
        if !(self.min_side > 0.0 && self.min_side <= self.max_side) {
            return Err(Error::Config("require 0 < min_side <= max_side".into()));
        }
        if !(self.aspect_min > 0.0 && self.aspect_min <= self.aspect_max) {
            return Err(Error::Config("require 0 < aspect_min <= aspect_max".into()));
        }
        Ok(())
    }
}

/// Per-object nuisance that persists across passes and rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectLatent {
    /// 0 = easy, 1 = hard under shift.
    pub hardness: f64,
    /// Standard-normal direction of the systematic box error.
    pub bias: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub image_id: String,
    pub dims: ImageDims,
    pub n_classes: u32,
    pub objects: Vec<GroundTruth>,
    pub latents: Vec<ObjectLatent>,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return lo;
    }
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Scene number `index` of the stream defined by `cfg.seed`.
pub fn generate_scene(cfg: &SceneConfig, index: u64) -> Result<Scene> {
    cfg.validate()?;
    let dims = ImageDims::new(cfg.width, cfg.height)?;
    let mut rng = rng_from_seed(derive_seed_indexed(cfg.seed, index));
    let n = rng.random_range(cfg.n_objects_min..=cfg.n_objects_max);

    let mut objects: Vec<GroundTruth> = Vec::with_capacity(n);
    let mut latents = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while objects.len() < n {
        if attempts >= cfg.max_attempts * n.max(1) {
            return Err(Error::InfeasiblePacking {
                placed: objects.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let long = log_uniform(&mut rng, cfg.min_side, cfg.max_side.min(cfg.width).min(cfg.height));
        let aspect = log_uniform(&mut rng, cfg.aspect_min, cfg.aspect_max);
        let (w, h) = if aspect >= 1.0 { (long / aspect, long) } else { (long, long * aspect) };
        let x1 = uniform(&mut rng, 0.0, cfg.width - w);
        let y1 = uniform(&mut rng, 0.0, cfg.height - h);
        let bbox = BBox::new(x1, y1, x1 + w, y1 + h)?;
        if !cfg.allow_overlap && objects.iter().any(|o| o.bbox.intersection_area(&bbox) > 0.0) {
            continue;
        }
        let class_id = rng.random_range(1..=cfg.n_classes);
        objects.push(GroundTruth::new(bbox, class_id));
        latents.push(ObjectLatent {
            hardness: rng.random::<f64>(),
            bias: [
                std_normal(&mut rng),
                std_normal(&mut rng),
                std_normal(&mut rng),
                std_normal(&mut rng),
            ],
        });
    }
    Ok(Scene {
        image_id: format!("scene-{index:06}"),
        dims,
        n_classes: cfg.n_classes,
        objects,
        latents,
    })
}

pub fn generate_scenes(cfg: &SceneConfig, count: usize) -> Result<Vec<Scene>> {
    (0..count as u64).map(|i| generate_scene(cfg, i)).collect()
}

/// Knobs of the simulated detector. All noise terms grow with `domain_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    /// Per-coordinate box noise in pixels before shift scaling.
    pub box_jitter_sigma: f64,
    pub miss_prob: f64,
    /// Mean number of single-pass spurious boxes per image and pass.
    pub false_positive_rate: f64,
    pub class_flip_prob: f64,
    /// Values above 1 sharpen confidences (overconfidence).
    pub confidence_temperature: f64,
    pub domain_shift: f64,
    /// Logit at zero jitter.
    pub conf_offset: f64,
    /// Logit drop per unit of normalized jitter.
    pub conf_slope: f64,
    /// Mean number of persistent distractors per image.
    pub clutter_rate: f64,
    /// Detections scoring below this are not emitted.
    pub min_score: f64,
}

impl Default for DetectorModel {
    /// The shifted detector (`domain_shift = 1`).
    fn default() -> Self {
        Self {
            box_jitter_sigma: 2.0,
            miss_prob: 0.05,
            false_positive_rate: 0.5,
            class_flip_prob: 0.03,
            confidence_temperature: 1.5,
            domain_shift: 1.0,
            conf_offset: 3.0,
            conf_slope: 2.0,
            clutter_rate: 1.5,
            min_score: 0.05,
        }
    }
}

impl DetectorModel {
    /// No jitter, misses, flips, spurious boxes or temperature distortion.
    pub fn noiseless() -> Self {
        Self {
            box_jitter_sigma: 0.0,
            miss_prob: 0.0,
            false_positive_rate: 0.0,
            class_flip_prob: 0.0,
            confidence_temperature: 1.0,
            domain_shift: 0.0,
            clutter_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64, name: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1]")))
            }
        };
        prob(self.miss_prob, "miss_prob")?;
        prob(self.class_flip_prob, "class_flip_prob")?;
        prob(self.min_score, "min_score")?;
        if self.confidence_temperature.is_nan() || self.confidence_temperature <= 0.0 {
            return Err(Error::Config("confidence_temperature must be positive".into()));
        }
        for (v, name) in [
            (self.box_jitter_sigma, "box_jitter_sigma"),
            (self.false_positive_rate, "false_positive_rate"),
            (self.domain_shift, "domain_shift"),
            (self.clutter_rate, "clutter_rate"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }

    fn is_noiseless(&self) -> bool {
        self.box_jitter_sigma == 0.0 && self.domain_shift == 0.0
    }

    /// `sigmoid(logit)^(1 / temperature)`.
    pub fn confidence(&self, logit: f64) -> f64 {
        let s = 1.0 / (1.0 + (-logit).exp());
        s.powf(1.0 / self.confidence_temperature)
    }
}

/// Emulates the adapted detector after `round_index` rounds: every noise knob
/// and the excess temperature shrink by `decay` per round.
pub fn round_schedule(model: &DetectorModel, round_index: u32, decay: f64) -> DetectorModel {
    let f = decay.powi(round_index as i32);
    DetectorModel {
        box_jitter_sigma: model.box_jitter_sigma * f,
        miss_prob: model.miss_prob * f,
        false_positive_rate: model.false_positive_rate * f,
        class_flip_prob: model.class_flip_prob * f,
        confidence_temperature: 1.0 + (model.confidence_temperature - 1.0) * f,
        domain_shift: model.domain_shift * f,
        clutter_rate: model.clutter_rate * f,
        ..*model
    }
}

pub const DEFAULT_ROUND_DECAY: f64 = 0.7;

// Fixed shape of the nuisance terms; only their scale is exposed.
const BIAS_FRACTION: f64 = 0.6;
const REFERENCE_SCALE: f64 = 32.0;
const SCALE_EXPONENT: f64 = 0.7;
const HARDNESS_LOGIT_DROP: f64 = 2.0;
const PASS_LOGIT_NOISE: f64 = 0.4;
const FLIP_LOGIT_DROP: f64 = 1.0;
const FP_LOGIT_MEAN: f64 = -4.5;
const FP_LOGIT_SD: f64 = 1.2;
const CLUTTER_LOGIT_MEAN: f64 = 0.0;
const CLUTTER_LOGIT_SD: f64 = 1.0;
const CLUTTER_PASS_NOISE: f64 = 4.0;
/// Share of spurious boxes and distractors placed next to a real object.
const NEAR_OBJECT_SHARE: f64 = 0.85;

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn other_class<R: Rng>(rng: &mut R, class_id: u32, n_classes: u32) -> u32 {
    if n_classes <= 1 {
        return class_id;
    }
    let k = rng.random_range(1..n_classes);
    if k >= class_id {
        k + 1
    } else {
        k
    }
}

fn random_box<R: Rng>(rng: &mut R, dims: ImageDims) -> BBox {
    let long = log_uniform(rng, 12.0, 160.0_f64.min(dims.width).min(dims.height));
    let aspect = log_uniform(rng, 0.5, 2.0);
    let (w, h) = if aspect >= 1.0 { (long / aspect, long) } else { (long, long * aspect) };
    let x1 = uniform(rng, 0.0, dims.width - w);
    let y1 = uniform(rng, 0.0, dims.height - h);
    BBox::new(x1, y1, x1 + w, y1 + h).expect("positive extent")
}

/// A box of comparable size beside a random object, overlapping it little.
fn near_object_box<R: Rng>(rng: &mut R, objects: &[GroundTruth], dims: ImageDims) -> BBox {
    if objects.is_empty() || rng.random::<f64>() >= NEAR_OBJECT_SHARE {
        return random_box(rng, dims);
    }
    let host = objects[rng.random_range(0..objects.len())].bbox;
    let (cx, cy) = host.center();
    let side = host.max_side();
    let w = host.width() * uniform(rng, 0.5, 1.2);
    let h = host.height() * uniform(rng, 0.5, 1.2);
    let angle = uniform(rng, 0.0, std::f64::consts::TAU);
    let dist = side * uniform(rng, 0.7, 1.5);
    let b = BBox::from_center(cx + dist * angle.cos(), cy + dist * angle.sin(), w, h).expect("positive extent");
    let clipped = clip_box(&b, dims);
    if clipped.area() > 0.0 {
        clipped
    } else {
        random_box(rng, dims)
    }
}

struct Distractor {
    bbox: BBox,
    class_id: u32,
    appear_prob: f64,
    logit_mean: f64,
}

fn jittered(gt: &BBox, offsets: [f64; 4], dims: ImageDims) -> Option<BBox> {
    let (x1, y1, x2, y2) = (
        gt.x1() + offsets[0],
        gt.y1() + offsets[1],
        gt.x2() + offsets[2],
        gt.y2() + offsets[3],
    );
    let b = BBox::new(x1.min(x2), y1.min(y2), x1.max(x2), y1.max(y2)).ok()?;
    let b = clip_box(&b, dims);
    (b.area() > 0.0).then_some(b)
}

/// Runs `n_passes` stochastic inferences of `model` on `scene`.
///
/// Per pass each object is missed with `miss_prob`; otherwise its box is the
/// ground truth plus a persistent per-object bias and fresh Gaussian noise
/// (scale `box_jitter_sigma * (1 + domain_shift)`), its class flips with
/// `class_flip_prob`, and its confidence is
/// `sigmoid(a - b * jitter_norm - shift * hardness * c + noise)^(1 / T)` where
/// `jitter_norm` is the RMS corner error over a tenth of the object scale.
/// Spurious single-pass boxes and persistent flickering distractors are added
/// on separate random streams.
pub fn simulate_passes(scene: &Scene, model: &DetectorModel, n_passes: usize, seed: u64) -> Result<PassSet> {
    model.validate()?;
    let dims = scene.dims;
    let n_classes = scene.n_classes.max(1);
    let mut obj_rng: ChaCha8Rng = rng_from_seed(derive_seed(seed, &format!("{}/objects", scene.image_id)));
    let mut fp_rng: ChaCha8Rng = rng_from_seed(derive_seed(seed, &format!("{}/spurious", scene.image_id)));
    let mut clutter_rng: ChaCha8Rng = rng_from_seed(derive_seed(seed, &format!("{}/clutter", scene.image_id)));

    let shift = model.domain_shift;
    let noiseless = model.is_noiseless();

    let distractors: Vec<Distractor> = (0..poisson(&mut clutter_rng, model.clutter_rate))
        .map(|_| Distractor {
            bbox: near_object_box(&mut clutter_rng, &scene.objects, dims),
            class_id: clutter_rng.random_range(1..=n_classes),
            appear_prob: uniform(&mut clutter_rng, 0.3, 0.9),
            logit_mean: CLUTTER_LOGIT_MEAN + CLUTTER_LOGIT_SD * std_normal(&mut clutter_rng),
        })
        .collect();

    let mut passes: Vec<Vec<Detection>> = Vec::with_capacity(n_passes);
    for k in 0..n_passes {
        let mut dets = Vec::new();
        for (gt, latent) in scene.objects.iter().zip(&scene.latents) {
            // draw every variate up front so streams stay aligned across models
            let miss_u: f64 = obj_rng.random();
            let noise = [
                std_normal(&mut obj_rng),
                std_normal(&mut obj_rng),
                std_normal(&mut obj_rng),
                std_normal(&mut obj_rng),
            ];
            let logit_noise = std_normal(&mut obj_rng);
            let flip_u: f64 = obj_rng.random();
            let flipped_class = other_class(&mut obj_rng, gt.class_id, n_classes);

            if miss_u < model.miss_prob {
                continue;
            }
            if noiseless {
                let conf = model.confidence(model.conf_offset).clamp(f64::MIN_POSITIVE, 1.0);
                dets.push(Detection::new(gt.bbox, gt.class_id, conf, k)?);
                continue;
            }
            let scale = (gt.bbox.width() * gt.bbox.height()).sqrt().max(1.0);
            let sigma = model.box_jitter_sigma
                * (1.0 + shift)
                * (0.5 + latent.hardness)
                * (scale / REFERENCE_SCALE).powf(SCALE_EXPONENT);
            let offsets: [f64; 4] =
                std::array::from_fn(|i| sigma * (BIAS_FRACTION * latent.bias[i] + noise[i]));
            let Some(bbox) = jittered(&gt.bbox, offsets, dims) else {
                continue;
            };
            let rms = (offsets.iter().map(|o| o * o).sum::<f64>() / 4.0).sqrt();
            let jitter_norm = rms / (0.1 * scale);
            let flip = flip_u < model.class_flip_prob;
            let mut logit = model.conf_offset - model.conf_slope * jitter_norm
                - shift * latent.hardness * HARDNESS_LOGIT_DROP
                + PASS_LOGIT_NOISE * (1.0 + shift) * logit_noise;
            if flip {
                logit -= FLIP_LOGIT_DROP;
            }
            let conf = model.confidence(logit);
            if conf < model.min_score || conf <= 0.0 {
                continue;
            }
            let class_id = if flip { flipped_class } else { gt.class_id };
            dets.push(Detection::new(bbox, class_id, conf.min(1.0), k)?);
        }

        for d in &distractors {
            let appear_u: f64 = clutter_rng.random();
            let noise = [
                std_normal(&mut clutter_rng),
                std_normal(&mut clutter_rng),
                std_normal(&mut clutter_rng),
                std_normal(&mut clutter_rng),
            ];
            let logit_noise = std_normal(&mut clutter_rng);
            if appear_u >= d.appear_prob {
                continue;
            }
            let sigma = 2.0 * model.box_jitter_sigma * (1.0 + shift);
            let Some(bbox) = jittered(&d.bbox, noise.map(|n| n * sigma), dims) else {
                continue;
            };
            let conf = model.confidence(d.logit_mean + CLUTTER_PASS_NOISE * logit_noise);
            if conf >= model.min_score {
                dets.push(Detection::new(bbox, d.class_id, conf.min(1.0), k)?);
            }
        }

        for _ in 0..poisson(&mut fp_rng, model.false_positive_rate * (1.0 + shift)) {
            let bbox = near_object_box(&mut fp_rng, &scene.objects, dims);
            let class_id = fp_rng.random_range(1..=n_classes);
            let conf = model.confidence(FP_LOGIT_MEAN + FP_LOGIT_SD * std_normal(&mut fp_rng));
            if conf >= model.min_score {
                dets.push(Detection::new(bbox, class_id, conf.min(1.0), k)?);
            }
        }
        passes.push(dets);
    }
    PassSet::new(scene.image_id.clone(), dims, passes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{build_consensus, ConsensusParams};
    use crate::eval::SizeClass;
    use crate::geometry::iou;

    fn is_true_object(c: &crate::consensus::ConsensusCluster, scene: &Scene) -> bool {
        scene
            .objects
            .iter()
            .any(|g| g.class_id == c.anchor.class_id && iou(&g.bbox, &c.anchor.bbox) >= 0.5)
    }

    #[test]
    fn scenes_are_reproducible() {
        let cfg = SceneConfig::default();
        assert_eq!(generate_scene(&cfg, 3).unwrap(), generate_scene(&cfg, 3).unwrap());
        assert_ne!(generate_scene(&cfg, 3).unwrap(), generate_scene(&cfg, 4).unwrap());
        let other = SceneConfig { seed: 8, ..cfg };
        assert_ne!(generate_scene(&cfg, 3).unwrap(), generate_scene(&other, 3).unwrap());
    }

    #[test]
    fn zero_objects_gives_empty_scene() {
        let cfg = SceneConfig { n_objects_min: 0, n_objects_max: 0, ..Default::default() };
        let scene = generate_scene(&cfg, 0).unwrap();
        assert!(scene.objects.is_empty());
        let ps = simulate_passes(&scene, &DetectorModel::noiseless(), 10, 1).unwrap();
        assert_eq!(ps.n_detections(), 0);
    }

    #[test]
    fn every_size_stratum_is_populated() {
        let scenes = generate_scenes(&SceneConfig::default(), 100).unwrap();
        let mut counts = [0usize; 3];
        for g in scenes.iter().flat_map(|s| &s.objects) {
            counts[match g.size_class() {
                SizeClass::Small => 0,
                SizeClass::Medium => 1,
                SizeClass::Large => 2,
            }] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
    }

    #[test]
    fn objects_do_not_overlap_by_default() {
        for scene in generate_scenes(&SceneConfig::default(), 50).unwrap() {
            for (i, a) in scene.objects.iter().enumerate() {
                for b in &scene.objects[i + 1..] {
                    assert_eq!(a.bbox.intersection_area(&b.bbox), 0.0);
                }
            }
        }
    }

    #[test]
    fn infeasible_packing_is_an_error() {
        let cfg = SceneConfig {
            width: 64.0,
            height: 64.0,
            n_objects_min: 20,
            n_objects_max: 20,
            min_side: 40.0,
            max_side: 60.0,
            max_attempts: 10,
            ..Default::default()
        };
        assert!(matches!(generate_scene(&cfg, 0), Err(Error::InfeasiblePacking { .. })));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = SceneConfig { n_objects_min: 5, n_objects_max: 2, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorModel { miss_prob: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorModel { confidence_temperature: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn passes_are_reproducible() {
        let scene = generate_scene(&SceneConfig::default(), 0).unwrap();
        let model = DetectorModel::default();
        let a = serde_json::to_string(&simulate_passes(&scene, &model, 10, 5).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate_passes(&scene, &model, 10, 5).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&simulate_passes(&scene, &model, 10, 6).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_model_recovers_ground_truth() {
        let model = DetectorModel::noiseless();
        for scene in generate_scenes(&SceneConfig::default(), 20).unwrap() {
            let ps = simulate_passes(&scene, &model, 10, 2).unwrap();
            for pass in &ps.passes {
                let boxes: Vec<_> = pass.iter().map(|d| (d.bbox, d.class_id)).collect();
                let gts: Vec<_> = scene.objects.iter().map(|g| (g.bbox, g.class_id)).collect();
                assert_eq!(boxes, gts);
            }
            let clusters = build_consensus(&ps, &ConsensusParams::default());
            assert_eq!(clusters.len(), scene.objects.len());
            for c in clusters {
                assert_eq!(c.stats.consistency_frac, 1.0);
                assert!((c.stats.p_hat - c.anchor.confidence).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certain_miss_empties_every_pass() {
        let model = DetectorModel { miss_prob: 1.0, ..DetectorModel::noiseless() };
        let scene = generate_scene(&SceneConfig::default(), 1).unwrap();
        let ps = simulate_passes(&scene, &model, 10, 3).unwrap();
        assert_eq!(ps.n_passes(), 10);
        assert!(ps.passes.iter().all(Vec::is_empty));
    }

    #[test]
    fn true_objects_are_more_consistent_than_false_positives() {
        let model = DetectorModel::default();
        let (mut tp, mut fp) = ((0.0, 0usize), (0.0, 0usize));
        for scene in generate_scenes(&SceneConfig::default(), 100).unwrap() {
            let ps = simulate_passes(&scene, &model, 10, 4).unwrap();
            for c in build_consensus(&ps, &ConsensusParams::default()) {
                let acc = if is_true_object(&c, &scene) { &mut tp } else { &mut fp };
                acc.0 += c.stats.consistency_frac;
                acc.1 += 1;
            }
        }
        assert!(tp.1 > 0 && fp.1 > 0);
        assert!(tp.0 / tp.1 as f64 > fp.0 / fp.1 as f64);
    }

    #[test]
    fn round_schedule_decays_noise() {
        let model = DetectorModel::default();
        assert_eq!(round_schedule(&model, 0, DEFAULT_ROUND_DECAY), model);
        let r2 = round_schedule(&model, 2, DEFAULT_ROUND_DECAY);
        assert!((r2.box_jitter_sigma - model.box_jitter_sigma * 0.49).abs() < 1e-12);
        assert!((r2.confidence_temperature - (1.0 + 0.5 * 0.49)).abs() < 1e-12);
        assert_eq!(r2.conf_offset, model.conf_offset);
    }

    #[test]
    fn more_shift_does_not_raise_true_object_confidence() {
        let scenes = generate_scenes(&SceneConfig::default(), 100).unwrap();
        let mean_p_hat = |shift: f64| {
            let model = DetectorModel { domain_shift: shift, ..Default::default() };
            let (mut sum, mut n) = (0.0, 0usize);
            for scene in &scenes {
                let ps = simulate_passes(scene, &model, 10, 9).unwrap();
                for c in build_consensus(&ps, &ConsensusParams::default()) {
                    if is_true_object(&c, scene) {
                        sum += c.stats.p_hat;
                        n += 1;
                    }
                }
            }
            sum / n as f64
        };
        let means: Vec<f64> = [0.0, 0.5, 1.0, 2.0].into_iter().map(mean_p_hat).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    }
}
