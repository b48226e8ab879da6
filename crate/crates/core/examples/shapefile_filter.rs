//! List a parcel layer, filter it by attribute and write the subset.

use std::path::PathBuf;

use parcelsight::vector_io::{filter_features, polygon_area, read_shapefile, write_subset_shapefile, Predicate, ShapefilePaths};

fn main() -> parcelsight::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/shapefiles/three_parcels.shp");
    let parcels = read_shapefile(&path)?;
    for p in &parcels {
        let attrs: Vec<String> = p.attributes.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("#{} area {:>6.1}  {}", p.record_index, polygon_area(&p.geometry), attrs.join(" "));
    }

    let pred: Predicate = "AREA > 110".parse()?;
    let subset = filter_features(&parcels, &pred)?;
    println!("{} of {} parcels match `{pred}`", subset.len(), parcels.len());

    let out = ShapefilePaths::from_path(std::env::temp_dir().join("parcelsight_subset.shp"));
    write_subset_shapefile(&subset, &out)?;
    println!("wrote {}", out.shp.display());
    Ok(())
}
