//! Classifies a few hand-made clusters under both selection variants.

use ugsel::consensus::UncertaintyStats;
use ugsel::gates::{classify, GateConfig, Variant};

fn stats(p_hat: f64, s2: f64, consistency_frac: f64) -> UncertaintyStats {
    UncertaintyStats {
        p_hat,
        s2,
        l_hat: 0.1,
        consistency: (consistency_frac * 9.0).round() as usize,
        consistency_frac,
    }
}

fn main() {
    let cases = [
        ("certain and stable", stats(0.9, 0.01, 1.0)),
        ("certain but flickering", stats(0.7, 0.2, 0.8)),
        ("confident one-off", stats(0.8, 0.0, 0.1)),
        ("uncertain, rarely seen", stats(0.3, 0.02, 0.2)),
        ("uncertain, often seen", stats(0.3, 0.02, 0.9)),
        ("background noise", stats(0.05, 0.0, 0.0)),
    ];
    println!("{:<24} {:<28} {:<28}", "cluster", "ssal", "ssal-dagger");
    for (name, s) in &cases {
        let a = classify(s, &GateConfig::with_variant(Variant::Ssal));
        let b = classify(s, &GateConfig::with_variant(Variant::SsalDagger));
        println!("{name:<24} {:<28} {:<28}", format!("{a:?}"), format!("{b:?}"));
    }
}
