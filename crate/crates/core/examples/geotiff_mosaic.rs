//! Read two adjacent GeoTIFF tiles, stitch them and write the mosaic.

use std::path::PathBuf;

use parcelsight::raster_io::{mosaic, read_geotiff, write_geotiff, TiffCompression, TiffWriteOptions};

fn main() -> parcelsight::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e");
    let tiles = [read_geotiff(dir.join("e2e_west.tif"))?, read_geotiff(dir.join("e2e_east.tif"))?];
    for (i, t) in tiles.iter().enumerate() {
        println!("tile {i}: {}x{} px, bounds {:?}, EPSG {}", t.width(), t.height(), t.world_bounds(), t.transform().crs_code);
    }
    let m = mosaic(&tiles)?;
    println!("mosaic: {}x{} px, bounds {:?}", m.width(), m.height(), m.world_bounds());

    let out = std::env::temp_dir().join("parcelsight_mosaic.tif");
    let opts = TiffWriteOptions { compression: TiffCompression::Deflate, ..Default::default() };
    std::fs::write(&out, write_geotiff(&m, &opts)?)?;
    println!("wrote {}", out.display());
    Ok(())
}
