//! Parcel polygons onto raster grids: rasterization, masked crops, and the
//! batch stitch -> select -> crop -> PNG pipeline.

mod pipeline;
pub(crate) mod scanline;

pub use pipeline::{extract_all, ExtractOptions, Manifest, ManifestEntry, Window};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster_io::{read_window, GeoRaster, GeoTransform};
use crate::vector_io::{ParcelFeature, PolygonGeom};

/// Dense binary mask, row-major.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ones", &self.count_ones())
            .finish()
    }
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Consistency(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixel extent of the set bits as `[min_col, min_row, max_col + 1, max_row + 1]`.
    pub fn bounds(&self) -> Option<[usize; 4]> {
        let mut b: Option<[usize; 4]> = None;
        for row in 0..self.height {
            for col in 0..self.width {
                if self.get(col, row) {
                    let e = b.get_or_insert([col, row, col + 1, row + 1]);
                    e[0] = e[0].min(col);
                    e[1] = e[1].min(row);
                    e[2] = e[2].max(col + 1);
                    e[3] = e[3].max(row + 1);
                }
            }
        }
        b
    }
}

fn rings_in_pixels(g: &PolygonGeom, t: &GeoTransform) -> Vec<Vec<(f64, f64)>> {
    g.rings()
        .iter()
        .map(|ring| ring.iter().map(|&(x, y)| t.world_to_pixel(x, y)).collect())
        .collect()
}

/// Pixels of a `w x h` grid whose centres fall inside the polygon (holes excluded).
pub fn rasterize_polygon(g: &PolygonGeom, t: &GeoTransform, w: usize, h: usize) -> BitMask {
    scanline::fill_rings(&rings_in_pixels(g, t), 0, 0, w, h)
}

/// Crop the parcel's bounding window out of `r`, painting pixels outside the
/// polygon with `background`. Returns the crop and the parcel mask over it.
///
/// `parcel_crs` is the CRS code of the parcel layer; 0 on either side means
/// unknown and is accepted with a warning.
pub fn crop_parcel(
    r: &GeoRaster,
    f: &ParcelFeature,
    background: [u8; 3],
    parcel_crs: u32,
) -> Result<(GeoRaster, BitMask)> {
    let t = r.transform();
    if t.crs_code != parcel_crs {
        if t.crs_code == 0 || parcel_crs == 0 {
            log::warn!(
                "record {}: CRS unknown on one side (raster {}, parcels {}); assuming they match",
                f.record_index,
                t.crs_code,
                parcel_crs
            );
        } else {
            return Err(Error::IncompatibleCrs {
                raster: t.crs_code,
                parcels: parcel_crs,
            });
        }
    }
    if r.band_count() != 3 {
        return Err(Error::Precondition(format!("parcel crops need 3 bands, raster has {}", r.band_count())));
    }

    let [min_x, min_y, max_x, max_y] = f.geometry.bbox();
    let (c0, r0) = t.world_to_pixel(min_x, max_y);
    let (c1, r1) = t.world_to_pixel(max_x, min_y);
    if ![c0, r0, c1, r1].iter().all(|v| v.is_finite()) {
        return Err(Error::EmptyWindow);
    }
    let clamp = |v: f64| v.clamp(-1e15, 1e15) as i64;
    let (col0, row0) = (clamp(c0.floor()), clamp(r0.floor()));
    let (col1, row1) = (clamp(c1.ceil()), clamp(r1.ceil()));
    if col1 <= col0 || row1 <= row0 {
        return Err(Error::EmptyWindow);
    }
    let mut crop = read_window(r, col0, row0, (col1 - col0) as usize, (row1 - row0) as usize)?;

    // Rasterize in the full raster's pixel frame so the crop mask is exactly
    // the full-grid mask restricted to the window.
    let (wc, wr) = (col0.max(0), row0.max(0));
    let mask = scanline::fill_rings(&rings_in_pixels(&f.geometry, t), wc, wr, crop.width(), crop.height());
    for row in 0..crop.height() {
        for col in 0..crop.width() {
            if !mask.get(col, row) {
                crop.set_pixel(col, row, &background);
            }
        }
    }
    Ok((crop, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn feature(g: PolygonGeom) -> ParcelFeature {
        ParcelFeature {
            geometry: g,
            attributes: IndexMap::new(),
            record_index: 0,
        }
    }

    fn raster(w: usize, h: usize, t: GeoTransform) -> GeoRaster {
        let px = (0..w * h * 3).map(|i| (i % 251) as u8 + 1).collect();
        GeoRaster::new(w, h, 3, px, t).unwrap()
    }

    #[test]
    fn aligned_square_sets_four_pixels() {
        let t = GeoTransform::new(0.0, 4.0, 1.0, 1.0, 0).unwrap();
        // pixels [0,2)x[0,2) are world x in [0,2], y in [2,4]
        let m = rasterize_polygon(&PolygonGeom::rectangle(0.0, 2.0, 2.0, 4.0), &t, 4, 4);
        assert_eq!(m.count_ones(), 4);
        assert_eq!(m.bounds(), Some([0, 0, 2, 2]));
    }

    #[test]
    fn outside_polygon_is_empty_and_grid_polygon_is_full() {
        let t = GeoTransform::new(0.0, 4.0, 1.0, 1.0, 0).unwrap();
        assert_eq!(rasterize_polygon(&PolygonGeom::rectangle(10.0, 10.0, 12.0, 12.0), &t, 4, 4).count_ones(), 0);
        assert_eq!(rasterize_polygon(&PolygonGeom::rectangle(0.0, 0.0, 4.0, 4.0), &t, 4, 4).count_ones(), 16);
    }

    #[test]
    fn full_extent_parcel_reproduces_raster() {
        let t = GeoTransform::new(100.0, 50.0, 0.5, 0.5, 2229).unwrap();
        let r = raster(6, 4, t);
        let f = feature(PolygonGeom::rectangle(100.0, 48.0, 103.0, 50.0));
        let (crop, mask) = crop_parcel(&r, &f, [0, 0, 0], 2229).unwrap();
        assert_eq!(crop, r);
        assert_eq!(mask.count_ones(), 24);
    }

    #[test]
    fn disjoint_parcel_is_empty_window() {
        let r = raster(4, 4, GeoTransform::new(0.0, 4.0, 1.0, 1.0, 0).unwrap());
        let f = feature(PolygonGeom::rectangle(10.0, 10.0, 11.0, 11.0));
        assert!(matches!(crop_parcel(&r, &f, [0, 0, 0], 0), Err(Error::EmptyWindow)));
    }

    #[test]
    fn crs_mismatch_is_rejected() {
        let r = raster(4, 4, GeoTransform::new(0.0, 4.0, 1.0, 1.0, 26911).unwrap());
        let f = feature(PolygonGeom::rectangle(0.0, 0.0, 1.0, 1.0));
        assert!(matches!(crop_parcel(&r, &f, [0, 0, 0], 2229), Err(Error::IncompatibleCrs { .. })));
        assert!(crop_parcel(&r, &f, [0, 0, 0], 0).is_ok());
    }

    #[test]
    fn l_shape_crop_matches_point_in_polygon() {
        let t = GeoTransform::new(0.0, 8.0, 1.0, 1.0, 0).unwrap();
        let r = raster(8, 8, t);
        let l = PolygonGeom::new(vec![vec![
            (1.0, 1.0),
            (1.0, 6.0),
            (3.0, 6.0),
            (3.0, 3.0),
            (6.0, 3.0),
            (6.0, 1.0),
            (1.0, 1.0),
        ]])
        .unwrap();
        let bg = [9, 9, 9];
        let (crop, mask) = crop_parcel(&r, &feature(l), bg, 0).unwrap();
        // bbox: x [1,6] -> cols 1..6, y [1,6] -> rows 2..7
        assert_eq!((crop.width(), crop.height()), (5, 5));
        assert_eq!(crop.transform().origin_x, 1.0);
        assert_eq!(crop.transform().origin_y, 6.0);
        for row in 0..5 {
            for col in 0..5 {
                let (x, y) = (1.0 + col as f64 + 0.5, 6.0 - row as f64 - 0.5);
                let inside = (x < 3.0 && y > 1.0 && y < 6.0) || (y < 3.0 && x > 1.0 && x < 6.0);
                assert_eq!(mask.get(col, row), inside, "({col},{row})");
                let expected = if inside { r.pixel(col + 1, row + 2) } else { &bg[..] };
                assert_eq!(crop.pixel(col, row), expected);
            }
        }
    }
}
