//! Evaluates the training objectives on small hand-built inputs.

use ugsel::geometry::BBox;
use ugsel::losses::{detection_loss, domain_adv_loss, focal_loss, iou_loss, pseudo_label_loss, DomainMap, LocationPrediction};

fn main() -> ugsel::Result<()> {
    for p in [0.1, 0.5, 0.9] {
        println!("focal({p}) = {:.5}", focal_loss(p, 0.25, 2.0)?);
    }
    let a = BBox::new(0.0, 0.0, 10.0, 10.0)?;
    let b = BBox::new(5.0, 0.0, 15.0, 10.0)?;
    println!("iou loss = {:.5}", iou_loss(&a, &b)?);

    let preds = vec![
        LocationPrediction {
            class_probs: vec![0.8, 0.1],
            bbox: a,
            target_class: Some(1),
            target_box: Some(b),
        },
        LocationPrediction {
            class_probs: vec![0.2, 0.3],
            bbox: b,
            target_class: None,
            target_box: None,
        },
    ];
    println!("detection loss = {:.5}", detection_loss(&preds)?);
    println!("pseudo-label loss = {:.5}", pseudo_label_loss(&preds)?);

    let src = DomainMap::filled(4, 4, 0.7, 1)?;
    let tgt = DomainMap::filled(4, 4, 0.4, 0)?;
    println!("domain loss = {:.5}", domain_adv_loss(&src, &tgt)?);
    Ok(())
}
