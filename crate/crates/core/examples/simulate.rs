//! Generates one scene, runs the shifted and the noiseless detector over it,
//! and writes both as line-delimited records to stdout.

use std::io::stdout;

use ugsel::records::{GroundTruthRecord, RecordWriter};
use ugsel::sim::{generate_scene, simulate_passes, DetectorModel, SceneConfig};

fn main() -> ugsel::Result<()> {
    let scene = generate_scene(&SceneConfig::default(), 0)?;
    let shifted = simulate_passes(&scene, &DetectorModel::default(), 10, 1)?;
    let clean = simulate_passes(&scene, &DetectorModel::noiseless(), 10, 1)?;
    eprintln!(
        "{} objects; shifted passes hold {} detections, noiseless ones {}",
        scene.objects.len(),
        shifted.n_detections(),
        clean.n_detections()
    );

    let mut out = RecordWriter::new(stdout().lock());
    out.write(&GroundTruthRecord {
        image_id: scene.image_id.clone(),
        dims: scene.dims,
        objects: scene.objects.clone(),
    })?;
    out.write(&shifted)?;
    drop(out.finish()?);
    Ok(())
}
