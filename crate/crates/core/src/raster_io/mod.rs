//! Georeferenced rasters: a GeoTIFF subset reader/writer, mosaicking,
//! windowed reads and RGB PNG export.
//!
//! Pixel samples are 8-bit and band-interleaved (`RGBRGB...`). A raster's
//! [`GeoTransform`] is north-up: column index grows eastward, row index grows
//! southward, so world `y` decreases as `row` increases.

mod geotiff;
mod mosaic;
mod png_io;

pub use geotiff::{parse_geotiff, read_geotiff, write_geotiff, ByteOrder, TiffCompression, TiffWriteOptions};
pub use mosaic::mosaic;
pub use png_io::{decode_png, encode_png, read_png, write_png, write_rgb_png};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine pixel <-> world mapping without rotation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    /// World x of the upper-left corner of pixel (0, 0).
    pub origin_x: f64,
    /// World y of the upper-left corner of pixel (0, 0).
    pub origin_y: f64,
    pub pixel_size_x: f64,
    /// Positive; rows run south so it is applied with a negative sign.
    pub pixel_size_y: f64,
    /// EPSG-style code, 0 when unknown.
    pub crs_code: u32,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size_x: f64, pixel_size_y: f64, crs_code: u32) -> Result<Self> {
        let finite = [origin_x, origin_y, pixel_size_x, pixel_size_y].iter().all(|v| v.is_finite());
        if !finite || pixel_size_x <= 0.0 || pixel_size_y <= 0.0 {
            return Err(Error::Georef(format!(
                "pixel sizes must be finite and positive, got ({pixel_size_x}, {pixel_size_y})"
            )));
        }
        Ok(Self {
            origin_x,
            origin_y,
            pixel_size_x,
            pixel_size_y,
            crs_code,
        })
    }

    /// Unit pixels, origin at (0, 0), unknown CRS. Handy for plain images.
    pub fn identity() -> Self {
        Self {
            origin_x: 0.0,
            origin_y: 0.0,
            pixel_size_x: 1.0,
            pixel_size_y: 1.0,
            crs_code: 0,
        }
    }

    /// Fractional `(col, row)` of a world point. Out-of-raster points are allowed.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.origin_x) / self.pixel_size_x, (self.origin_y - y) / self.pixel_size_y)
    }

    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        (self.origin_x + col * self.pixel_size_x, self.origin_y - row * self.pixel_size_y)
    }

    /// The transform of a sub-grid whose pixel (0, 0) is this grid's `(col0, row0)`.
    pub fn shifted(&self, col0: i64, row0: i64) -> Self {
        let (origin_x, origin_y) = self.pixel_to_world(col0 as f64, row0 as f64);
        Self {
            origin_x,
            origin_y,
            ..*self
        }
    }
}

/// Free-function spelling of [`GeoTransform::world_to_pixel`].
pub fn world_to_pixel(t: &GeoTransform, x: f64, y: f64) -> (f64, f64) {
    t.world_to_pixel(x, y)
}

/// Free-function spelling of [`GeoTransform::pixel_to_world`].
pub fn pixel_to_world(t: &GeoTransform, col: f64, row: f64) -> (f64, f64) {
    t.pixel_to_world(col, row)
}

/// A georeferenced 8-bit raster, band-interleaved, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoRaster {
    width: usize,
    height: usize,
    band_count: usize,
    pixels: Vec<u8>,
    transform: GeoTransform,
}

impl GeoRaster {
    pub fn new(width: usize, height: usize, band_count: usize, pixels: Vec<u8>, transform: GeoTransform) -> Result<Self> {
        if width == 0 || height == 0 || band_count == 0 {
            return Err(Error::Precondition(format!(
                "raster dimensions must be positive, got {width}x{height}x{band_count}"
            )));
        }
        if pixels.len() != width * height * band_count {
            return Err(Error::Consistency(format!(
                "{} samples for a {width}x{height}x{band_count} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            band_count,
            pixels,
            transform,
        })
    }

    /// A raster filled with a single colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3], transform: GeoTransform) -> Result<Self> {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, 3, pixels, transform)
    }

    pub fn from_rgb_image(image: RgbImage, transform: GeoTransform) -> Result<Self> {
        Self::new(image.width, image.height, 3, image.data, transform)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_count(&self) -> usize {
        self.band_count
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    /// Samples of pixel `(col, row)`.
    pub fn pixel(&self, col: usize, row: usize) -> &[u8] {
        let i = (row * self.width + col) * self.band_count;
        &self.pixels[i..i + self.band_count]
    }

    pub fn set_pixel(&mut self, col: usize, row: usize, samples: &[u8]) {
        let i = (row * self.width + col) * self.band_count;
        self.pixels[i..i + self.band_count].copy_from_slice(samples);
    }

    /// World extent as `[min_x, min_y, max_x, max_y]`.
    pub fn world_bounds(&self) -> [f64; 4] {
        let (x0, y0) = self.transform.pixel_to_world(0.0, 0.0);
        let (x1, y1) = self.transform.pixel_to_world(self.width as f64, self.height as f64);
        [x0, y1, x1, y0]
    }

    /// Drops the georeferencing. Fails unless the raster has exactly 3 bands.
    pub fn to_rgb_image(&self) -> Result<RgbImage> {
        if self.band_count != 3 {
            return Err(Error::Precondition(format!(
                "RGB output needs 3 bands, raster has {}",
                self.band_count
            )));
        }
        Ok(RgbImage {
            width: self.width,
            height: self.height,
            data: self.pixels.clone(),
        })
    }

    /// Clipped window read; see [`read_window`].
    pub fn window(&self, col0: i64, row0: i64, w: usize, h: usize) -> Result<GeoRaster> {
        read_window(self, col0, row0, w, h)
    }
}

/// Plain 8-bit RGB image without georeferencing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Consistency(format!(
                "{} bytes for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn get(&self, col: usize, row: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Reads the window `[col0, col0 + w) x [row0, row0 + h)`, clipped to the
/// raster. The returned raster carries the transform of the actual window.
pub fn read_window(r: &GeoRaster, col0: i64, row0: i64, w: usize, h: usize) -> Result<GeoRaster> {
    let c_start = col0.max(0);
    let r_start = row0.max(0);
    let c_end = (col0.saturating_add(w as i64)).min(r.width as i64);
    let r_end = (row0.saturating_add(h as i64)).min(r.height as i64);
    if c_end <= c_start || r_end <= r_start {
        return Err(Error::EmptyWindow);
    }
    let (cw, ch) = ((c_end - c_start) as usize, (r_end - r_start) as usize);
    let bands = r.band_count;
    let mut pixels = Vec::with_capacity(cw * ch * bands);
    for row in r_start as usize..r_end as usize {
        let start = (row * r.width + c_start as usize) * bands;
        pixels.extend_from_slice(&r.pixels[start..start + cw * bands]);
    }
    GeoRaster::new(cw, ch, bands, pixels, r.transform.shifted(c_start, r_start))
}
