//! Expand a dataset with seeded rotate/flip variants.

use std::path::PathBuf;

use parcelsight::augment::{expand_dataset, plan_variant, AugmentConfig};
use parcelsight::dataset::{import_labelme, save_dataset, Dataset};

fn main() -> parcelsight::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labelme/lot_five.json");
    let ds = Dataset { images: vec![import_labelme(&path)?] };
    let cfg = AugmentConfig { per_image_outputs: 3, seed: 7, ..Default::default() };
    for k in 0..cfg.per_image_outputs {
        let p = plan_variant(&cfg, 0, k);
        println!("variant {k}: rotate {:+.2} deg, flip {}", p.angle_deg, p.flipped);
    }

    let out = expand_dataset(&ds, &cfg)?;
    for img in &out.images {
        let a = &img.annotations;
        println!("{:<16} {} instance(s)", a.name, a.instances.len());
    }
    let dir = std::env::temp_dir().join("parcelsight_augmented");
    save_dataset(&out, &dir)?;
    println!("saved to {}", dir.display());
    Ok(())
}
