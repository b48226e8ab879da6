//! Crop every selected parcel out of a stitched raster.

use std::path::PathBuf;

use parcelsight::parcel_extract::{extract_all, ExtractOptions};
use parcelsight::vector_io::Predicate;

fn main() -> parcelsight::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e");
    let rasters = [dir.join("e2e_west.tif"), dir.join("e2e_east.tif")];
    let layers = [dir.join("parcels.shp")];
    let pred: Predicate = "HAS_LOT == yes".parse()?;
    let out = std::env::temp_dir().join("parcelsight_crops");
    let opts = ExtractOptions { background: [255, 255, 255], parcel_crs: 32615, jobs: 0 };

    let manifest = extract_all(&rasters, &layers, Some(&pred), &out, &opts)?;
    for e in &manifest {
        println!("record {} -> {:?} window {:?} rasters {:?} [{}]", e.record_index, e.png_path, e.window, e.raster_indices, e.status);
    }
    println!("crops and manifest.json in {}", out.display());
    Ok(())
}
