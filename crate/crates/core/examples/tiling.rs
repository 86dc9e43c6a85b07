//! Target tiles around uncertain detections, seeded source crops, and the
//! whole-image extension.

use ugsel::gates::Variant;
use ugsel::geometry::{BBox, ImageDims};
use ugsel::tiling::{assemble_tile_batch, extract_target_tile, sample_source_tile, ImageTiles, TilingConfig};

fn main() -> ugsel::Result<()> {
    let dims = ImageDims::new(1024.0, 512.0)?;
    let cfg = TilingConfig::default();

    let anchors = [BBox::new(100.0, 100.0, 120.0, 130.0)?, BBox::new(1000.0, 480.0, 1020.0, 500.0)?];
    let target: Vec<_> = anchors
        .iter()
        .map(|b| extract_target_tile("target-0", b, None, dims, cfg.scale))
        .collect();
    for t in &target {
        println!("target tile {:?}", t.region.to_array());
    }

    let gts = [BBox::new(400.0, 200.0, 460.0, 260.0)?];
    for seed in 0..3 {
        let tile = sample_source_tile("source-0", &gts, dims, seed, &cfg).expect("a crop exists");
        println!("source tile seed {seed}: {:?}", tile.region.to_array());
    }

    let images: Vec<ImageTiles> = (0..8)
        .map(|i| ImageTiles {
            image_id: format!("target-{i}"),
            dims,
            target: target.clone(),
            source: Vec::new(),
        })
        .collect();
    for variant in [Variant::Ssal, Variant::SsalDagger] {
        let batch = assemble_tile_batch(&images, cfg.full_image_prob, 1, variant);
        println!("{}: {} tiles for {} images", variant.as_str(), batch.len(), images.len());
    }
    Ok(())
}
