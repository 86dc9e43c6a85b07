//! Reliability table of all consensus anchors versus the selected ones on
//! simulated data.

use ugsel::calibration::{match_for_calibration, CalibrationTally};
use ugsel::config::Config;
use ugsel::consensus::build_consensus;
use ugsel::eval::ScoredBox;
use ugsel::gates::select_pseudo_label_indices;
use ugsel::pipeline::{simulated_inputs, Round};

fn main() -> ugsel::Result<()> {
    let cfg = Config::default();
    let mut all = CalibrationTally::new(cfg.evaluation.ece_bins);
    let mut selected = CalibrationTally::new(cfg.evaluation.ece_bins);
    for input in simulated_inputs(&cfg, Round::R1) {
        let input = input?;
        let gts = input.ground_truth.unwrap_or_default();
        let clusters = build_consensus(&input.passes, &cfg.gates.consensus_params());
        let picked = select_pseudo_label_indices(&clusters, &cfg.gates).selected;
        let boxes: Vec<ScoredBox> = clusters
            .iter()
            .map(|c| ScoredBox {
                bbox: c.anchor.bbox,
                class_id: c.anchor.class_id,
                confidence: c.anchor.confidence,
            })
            .collect();
        for (i, m) in match_for_calibration(&boxes, &gts, 0.5).iter().enumerate() {
            all.add(m);
            if picked.contains(&i) {
                selected.add(m);
            }
        }
    }
    for (name, tally) in [("all", &all), ("selected", &selected)] {
        let report = tally.report()?;
        println!("{name}: ece {:.4} over {} detections", report.ece, report.total);
        for bin in report.bins.iter().filter(|b| b.count > 0) {
            println!(
                "  ({:.1}, {:.1}]  n={:<5} conf {:.3}  acc {:.3}",
                bin.lo, bin.hi, bin.count, bin.mean_confidence, bin.accuracy
            );
        }
    }
    Ok(())
}
