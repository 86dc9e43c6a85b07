//! Fuses three stochastic passes over one image into consensus clusters and
//! prints their uncertainty statistics.

use ugsel::consensus::{build_consensus_with_duplicates, ConsensusParams, Detection, PassSet};
use ugsel::geometry::{BBox, ImageDims};

fn det(b: [f64; 4], class_id: u32, conf: f64, pass: usize) -> Detection {
    Detection::new(BBox::new(b[0], b[1], b[2], b[3]).unwrap(), class_id, conf, pass).unwrap()
}

fn main() -> ugsel::Result<()> {
    let passes = vec![
        vec![det([10.0, 10.0, 50.0, 50.0], 1, 0.90, 0), det([200.0, 40.0, 230.0, 90.0], 2, 0.35, 0)],
        vec![det([12.0, 11.0, 51.0, 52.0], 1, 0.85, 1)],
        vec![det([9.0, 10.0, 49.0, 48.0], 1, 0.80, 2), det([202.0, 38.0, 231.0, 88.0], 2, 0.60, 2)],
    ];
    let ps = PassSet::new("demo", ImageDims::new(320.0, 160.0)?, passes)?;
    let (kept, dropped) = build_consensus_with_duplicates(&ps, &ConsensusParams::default());

    println!("{:>5} {:>6} {:>5} {:>7} {:>7} {:>7} {:>6}", "pass", "class", "conf", "p_hat", "s2", "l_hat", "frac");
    for c in &kept {
        println!(
            "{:>5} {:>6} {:>5.2} {:>7.3} {:>7.4} {:>7.3} {:>6.2}",
            c.anchor.pass_index,
            c.anchor.class_id,
            c.anchor.confidence,
            c.stats.p_hat,
            c.stats.s2,
            c.stats.l_hat,
            c.stats.consistency_frac
        );
    }
    println!("{} clusters kept, {} merged as duplicates", kept.len(), dropped.len());
    Ok(())
}
