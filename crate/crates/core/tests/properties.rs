mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ugsel::calibration::{ece, MatchedDetection};
use ugsel::consensus::{build_consensus, ConsensusCluster, ConsensusParams, Detection, PassSet, UncertaintyStats};
use ugsel::eval::{average_precision, ImageEval, ScoredBox};
use ugsel::gates::{
    classify, pl_gate, select_pseudo_labels, tile_gate, ugpl_dagger_gate, ugpl_gate, ugt_dagger_gate, ugt_gate,
    GateConfig, Variant, Verdict,
};
use ugsel::geometry::{BBox, ImageDims};
use ugsel::losses::{focal_loss, iou_loss};
use ugsel::tiling::extract_target_tile;

fn arb_stats(n_passes: usize) -> impl Strategy<Value = UncertaintyStats> {
    (0.0..=1.0f64, 0.0..=0.25f64, 0.0..=1.0f64, 0..n_passes).prop_map(move |(p_hat, s2, l_hat, consistency)| {
        UncertaintyStats {
            p_hat,
            s2,
            l_hat,
            consistency,
            consistency_frac: consistency as f64 / (n_passes - 1) as f64,
        }
    })
}

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.0..500.0f64, 0.0..400.0f64, 1.0..200.0f64, 1.0..200.0f64)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h).unwrap())
}

fn pass_set(seed: u64, max_passes: usize, max_dets: usize) -> PassSet {
    common::random_pass_set(&mut ChaCha8Rng::seed_from_u64(seed), max_passes, max_dets)
}

fn signature(clusters: &[ConsensusCluster]) -> Vec<String> {
    let mut v: Vec<String> = clusters
        .iter()
        .map(|c| {
            format!(
                "{:?} {} {} {:?} {} {} {}",
                c.anchor.bbox.to_array(),
                c.anchor.class_id,
                c.anchor.confidence,
                c.stats.p_hat,
                c.stats.s2,
                c.stats.l_hat,
                c.stats.consistency
            )
        })
        .collect();
    v.sort();
    v
}

fn scaled(ps: &PassSet, s: f64) -> PassSet {
    let passes = ps
        .passes
        .iter()
        .map(|pass| {
            pass.iter()
                .map(|d| {
                    let [x1, y1, x2, y2] = d.bbox.to_array();
                    Detection {
                        bbox: BBox::new(x1 * s, y1 * s, x2 * s, y2 * s).unwrap(),
                        ..*d
                    }
                })
                .collect()
        })
        .collect();
    PassSet::new(
        ps.image_id.clone(),
        ImageDims::new(ps.dims.width * s, ps.dims.height * s).unwrap(),
        passes,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn gate_variants_nest(stats in arb_stats(10)) {
        let cfg = GateConfig::default();
        prop_assert!(!ugpl_dagger_gate(&stats, &cfg) || ugpl_gate(&stats, &cfg));
        prop_assert!(!ugt_gate(&stats, &cfg) || ugt_dagger_gate(&stats, &cfg));
    }

    #[test]
    fn pseudo_label_and_tile_gates_are_disjoint(stats in arb_stats(10), dagger in any::<bool>()) {
        let variant = if dagger { Variant::SsalDagger } else { Variant::Ssal };
        let cfg = GateConfig::with_variant(variant);
        prop_assert!(!(pl_gate(&stats, &cfg) && tile_gate(&stats, &cfg)));
        let verdict = classify(&stats, &cfg);
        prop_assert_eq!(verdict == Verdict::PseudoLabel, pl_gate(&stats, &cfg));
    }

    #[test]
    fn tighter_variance_bound_never_admits_more(stats in arb_stats(10), k0 in 0.01..0.25f64, shrink in 0.0..1.0f64) {
        let loose = GateConfig { kappa0: k0, ..GateConfig::with_variant(Variant::SsalDagger) };
        let tight = GateConfig { kappa0: k0 * shrink.max(1e-3), ..loose };
        prop_assert!(!pl_gate(&stats, &tight) || pl_gate(&stats, &loose));
    }

    #[test]
    fn raising_kappa1_only_removes_pseudo_labels(seed in any::<u64>(), k1 in 0.2..0.8f64, dk in 0.0..0.2f64, dagger in any::<bool>()) {
        let ps = pass_set(seed, 4, 12);
        let variant = if dagger { Variant::SsalDagger } else { Variant::Ssal };
        let low = GateConfig { kappa1: k1, kappa2: 0.3, ..GateConfig::with_variant(variant) };
        let high = GateConfig { kappa1: k1 + dk, ..low };
        let clusters = build_consensus(&ps, &low.consensus_params());
        let before = select_pseudo_labels(&clusters, &low);
        let after = select_pseudo_labels(&clusters, &high);
        prop_assert!(after.iter().all(|pl| before.contains(pl)));
    }

    #[test]
    fn gates_ignore_uniform_rescaling(seed in any::<u64>(), up in any::<bool>()) {
        let ps = pass_set(seed, 3, 8);
        let s = if up { 4.0 } else { 0.5 };
        let params = ConsensusParams::default();
        let cfg = GateConfig { kappa2: 0.3, ..GateConfig::default() };
        let a = build_consensus(&ps, &params);
        let b = build_consensus(&scaled(&ps, s), &params);
        let verdicts = |cs: &[ConsensusCluster]| {
            let mut v: Vec<String> = cs.iter().map(|c| format!("{:?}{:?}", c.anchor.class_id, classify(&c.stats, &cfg))).collect();
            v.sort();
            v
        };
        prop_assert_eq!(verdicts(&a), verdicts(&b));
    }

    #[test]
    fn consensus_ignores_pass_order(seed in any::<u64>(), rot in 0usize..4) {
        let ps = pass_set(seed, 4, 10);
        let n = ps.n_passes();
        let order: Vec<usize> = (0..n).map(|k| (k + rot) % n).rev().collect();
        let params = ConsensusParams::default();
        prop_assert_eq!(
            signature(&build_consensus(&ps, &params)),
            signature(&build_consensus(&ps.permuted(&order), &params))
        );
    }

    #[test]
    fn consensus_statistics_stay_in_range(seed in any::<u64>()) {
        let ps = pass_set(seed, 4, 10);
        for c in build_consensus(&ps, &ConsensusParams::default()) {
            prop_assert!((0.0..=1.0).contains(&c.stats.consistency_frac));
            prop_assert!(c.stats.s2 >= 0.0);
            prop_assert!((0.0..=1.0).contains(&c.stats.l_hat));
            let confs: Vec<f64> = c.members.iter().map(|m| m.detection.confidence).collect();
            if confs.windows(2).all(|w| w[0] == w[1]) {
                prop_assert_eq!(c.stats.s2, 0.0);
            }
        }
    }

    #[test]
    fn same_pass_detections_never_merge(seed in any::<u64>()) {
        let ps = pass_set(seed, 1, 8);
        let clusters = build_consensus(&ps, &ConsensusParams::default());
        prop_assert_eq!(clusters.len(), ps.n_detections());
        prop_assert!(clusters.iter().all(|c| c.members.is_empty()));
    }

    #[test]
    fn target_tiles_stay_inside_and_cover_the_anchor(b in arb_box(), scale in 1.0..8.0f64) {
        let dims = ImageDims::new(800.0, 600.0).unwrap();
        let t = extract_target_tile("img", &b, None, dims, scale);
        let [x1, y1, x2, y2] = t.region.to_array();
        let eps = 1e-9;
        prop_assert!(x1 >= -eps && y1 >= -eps && x2 <= dims.width + eps && y2 <= dims.height + eps);
        prop_assert!((t.region.width() - t.region.height()).abs() < 1e-9);
        let (cx, cy) = b.center();
        prop_assert!(t.region.contains_point(cx, cy));
        if scale * b.max_side() <= dims.height {
            prop_assert!(t.region.contains_box(&b));
        }
    }

    #[test]
    fn focal_loss_is_nonnegative_and_decreasing(p in 0.01..0.99f64, dp in 0.0..0.01f64, alpha in 0.05..0.95f64, g in 0.0..4.0f64) {
        let a = focal_loss(p, alpha, g).unwrap();
        let b = focal_loss(p + dp, alpha, g).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(b <= a + 1e-12);
        prop_assert!(focal_loss(1.0, alpha, g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn iou_loss_ignores_uniform_scaling(a in arb_box(), dx in -0.5..0.5f64, dy in -0.5..0.5f64, s in 0.1..10.0f64) {
        let b = a.translate(dx * a.width(), dy * a.height());
        let sc = |x: &BBox| x.scale(s);
        let lhs = iou_loss(&a, &b).unwrap();
        let rhs = iou_loss(&sc(&a), &sc(&b)).unwrap();
        prop_assert!(lhs >= 0.0);
        prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + lhs));
    }

    #[test]
    fn ece_is_bounded_and_order_free(
        items in prop::collection::vec((0.001..=1.0f64, any::<bool>()), 1..60),
        bins in 1usize..20,
        rot in 0usize..60,
    ) {
        let matched: Vec<MatchedDetection> = items.iter().map(|&(confidence, correct)| MatchedDetection { confidence, correct }).collect();
        let r = ece(&matched, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.ece));
        prop_assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), matched.len());
        let mut rotated = matched.clone();
        rotated.rotate_left(rot % matched.len());
        prop_assert!((ece(&rotated, bins).unwrap().ece - r.ece).abs() < 1e-12);
        prop_assert_eq!(ece(&matched, bins + 7).unwrap().total, matched.len());
    }

    #[test]
    fn average_precision_is_a_rank_statistic(seed in any::<u64>(), power in 0.2..5.0f64) {
        let images = common::random_eval_instance(&mut ChaCha8Rng::seed_from_u64(seed));
        let warped: Vec<ImageEval> = images
            .iter()
            .map(|im| ImageEval {
                detections: im.detections.iter().map(|d| ScoredBox { confidence: d.confidence.powf(power), ..*d }).collect(),
                ground_truths: im.ground_truths.clone(),
            })
            .collect();
        for class_id in 1..=2 {
            let a = average_precision(&images, 0.5, class_id);
            let b = average_precision(&warped, 0.5, class_id);
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn low_confidence_false_positive_never_raises_ap(seed in any::<u64>(), x in 0.0..100.0f64) {
        let mut images = common::random_eval_instance(&mut ChaCha8Rng::seed_from_u64(seed));
        let before = average_precision(&images, 0.5, 1);
        // far from every ground truth, below every existing score
        images[0].detections.push(ScoredBox {
            bbox: BBox::new(1000.0 + x, 1000.0, 1010.0 + x, 1010.0).unwrap(),
            class_id: 1,
            confidence: 0.001,
        });
        let after = average_precision(&images, 0.5, 1);
        if let (Some(b), Some(a)) = (before, after) {
            prop_assert!(a <= b + 1e-12);
        }
    }
}
