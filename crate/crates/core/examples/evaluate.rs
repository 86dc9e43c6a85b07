//! Average precision of a single simulated pass, overall and per size.

use ugsel::config::Config;
use ugsel::eval::{map_report, ImageEval, ScoredBox};
use ugsel::pipeline::{simulated_inputs, Round};

fn main() -> ugsel::Result<()> {
    let cfg = Config::default();
    for round in Round::ALL {
        let mut images = Vec::new();
        for input in simulated_inputs(&cfg, round) {
            let input = input?;
            images.push(ImageEval {
                detections: input.passes.passes[0]
                    .iter()
                    .map(|d| ScoredBox {
                        bbox: d.bbox,
                        class_id: d.class_id,
                        confidence: d.confidence,
                    })
                    .collect(),
                ground_truths: input.ground_truth.unwrap_or_default(),
            });
        }
        let r = map_report(&images);
        let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{:.3}", x));
        println!(
            "{round}: mAP50 {} mAP75 {} mAP {} | S {} M {} L {}",
            f(r.map50),
            f(r.map75),
            f(r.ap_mean),
            f(r.ap_small),
            f(r.ap_medium),
            f(r.ap_large)
        );
    }
    Ok(())
}
