//! Pseudo-label precision and calibration of both variants against plain
//! confidence ranking at the same number of selections.

use ugsel::config::Config;
use ugsel::pipeline::{compare_variants, simulated_inputs, Round};

fn main() -> ugsel::Result<()> {
    let cfg = Config::default();
    for round in [Round::R1, Round::R2] {
        let images: Vec<_> = simulated_inputs(&cfg, round)
            .map(|r| r.map(|i| (i.passes, i.ground_truth.unwrap_or_default())))
            .collect::<ugsel::Result<_>>()?;
        let report = compare_variants(&images, &cfg.gates, cfg.evaluation.iou_threshold, cfg.evaluation.ece_bins)?;
        println!("{round}, {} images", report.n_images);
        print!("{}", report.summary_table());
    }
    Ok(())
}
