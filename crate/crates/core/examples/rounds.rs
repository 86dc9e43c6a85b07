//! Runs R0, R1 and R2 on the simulator for both variants and prints each
//! round's summary.

use ugsel::config::Config;
use ugsel::gates::Variant;
use ugsel::pipeline::{run_round, simulated_inputs, CollectSink, Round, RoundSettings};

fn main() -> ugsel::Result<()> {
    for variant in [Variant::Ssal, Variant::SsalDagger] {
        let mut cfg = Config::default();
        cfg.gates.variant = variant;
        for round in Round::ALL {
            let inputs: Vec<_> = simulated_inputs(&cfg, round).collect::<ugsel::Result<_>>()?;
            let mut sink = CollectSink::default();
            let report = run_round(inputs.into_iter().map(Ok), &RoundSettings::from_config(&cfg, round), &mut sink)?;
            print!("{}", report.summary_table());
        }
    }
    Ok(())
}
