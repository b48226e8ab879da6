use super::{GeoRaster, GeoTransform};
use crate::error::{Error, Result};

const PIXEL_SIZE_RTOL: f64 = 1e-9;
const ALIGNMENT_TOL: f64 = 1e-6;

/// Stitch rasters sharing one grid into their bounding mosaic.
///
/// Where inputs overlap the last raster in `rasters` wins; pixels covered by
/// no input are black.
pub fn mosaic(rasters: &[GeoRaster]) -> Result<GeoRaster> {
    let first = rasters
        .first()
        .ok_or_else(|| Error::Precondition("mosaic needs at least one raster".into()))?;
    let reference = *first.transform();

    let mut offsets = Vec::with_capacity(rasters.len());
    for (i, r) in rasters.iter().enumerate() {
        let t = r.transform();
        if r.band_count() != 3 {
            return Err(Error::IncompatibleGrid(format!("raster {i} has {} bands, expected 3", r.band_count())));
        }
        if t.crs_code != reference.crs_code {
            return Err(Error::IncompatibleGrid(format!(
                "raster {i} CRS {} differs from {}",
                t.crs_code, reference.crs_code
            )));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= PIXEL_SIZE_RTOL * b.abs();
        if !close(t.pixel_size_x, reference.pixel_size_x) || !close(t.pixel_size_y, reference.pixel_size_y) {
            return Err(Error::IncompatibleGrid(format!(
                "raster {i} pixel size ({}, {}) differs from ({}, {})",
                t.pixel_size_x, t.pixel_size_y, reference.pixel_size_x, reference.pixel_size_y
            )));
        }
        let (col, row) = reference.world_to_pixel(t.origin_x, t.origin_y);
        let (col_i, row_i) = (col.round(), row.round());
        if (col - col_i).abs() > ALIGNMENT_TOL || (row - row_i).abs() > ALIGNMENT_TOL {
            return Err(Error::Alignment(format!("raster {i} sits at fractional pixel offset ({col}, {row})")));
        }
        offsets.push((col_i as i64, row_i as i64));
    }

    if rasters.len() == 1 {
        return Ok(first.clone());
    }

    let min_col = offsets.iter().map(|o| o.0).min().unwrap();
    let min_row = offsets.iter().map(|o| o.1).min().unwrap();
    let max_col = offsets.iter().zip(rasters).map(|(o, r)| o.0 + r.width() as i64).max().unwrap();
    let max_row = offsets.iter().zip(rasters).map(|(o, r)| o.1 + r.height() as i64).max().unwrap();
    let (width, height) = ((max_col - min_col) as usize, (max_row - min_row) as usize);

    let mut pixels = vec![0u8; width * height * 3];
    for (r, &(col, row)) in rasters.iter().zip(&offsets) {
        let dx = (col - min_col) as usize;
        let dy = (row - min_row) as usize;
        let span = r.width() * 3;
        for y in 0..r.height() {
            let dst = ((dy + y) * width + dx) * 3;
            pixels[dst..dst + span].copy_from_slice(&r.pixels()[y * span..(y + 1) * span]);
        }
    }
    let transform: GeoTransform = reference.shifted(min_col, min_row);
    GeoRaster::new(width, height, 3, pixels, transform)
}
