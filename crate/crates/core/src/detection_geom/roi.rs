//! Fixed-size resampling of a feature-map region.
//!
//! Rois are given in image pixels and divided by the map stride. RoIPool snaps
//! the roi outward to whole cells and takes bin maxima; RoIAlign keeps the
//! fractional geometry and averages bilinear samples (cell values sit at cell
//! centres).

use serde::{Deserialize, Serialize};

use crate::annotation::BBox;
use crate::error::{Error, Result};

/// Dense `channels x height x width` array of features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    stride: f64,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, stride: f64, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Precondition("feature map dimensions must be positive".into()));
        }
        // written so that NaN is rejected too
        if stride.is_nan() || stride < 1.0 {
            return Err(Error::Precondition(format!("feature map stride {stride} must be at least 1")));
        }
        if values.len() != channels * height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {channels}x{height}x{width} map",
                values.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            stride,
            values,
        })
    }

    pub fn constant(channels: usize, height: usize, width: usize, stride: f64, value: f64) -> Result<Self> {
        Self::new(channels, height, width, stride, vec![value; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    /// Extent in image pixels.
    fn image_extent(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width as f64 * self.stride, self.height as f64 * self.stride)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoiPoolConfig {
    /// `(height, width)` of the pooled output.
    pub output_size: (usize, usize),
}

impl Default for RoiPoolConfig {
    fn default() -> Self {
        Self { output_size: (32, 32) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoiAlignConfig {
    pub output_size: (usize, usize),
    /// Sample grid per output bin, `(rows, cols)`.
    pub sampling_ratio: (usize, usize),
}

impl Default for RoiAlignConfig {
    fn default() -> Self {
        Self {
            output_size: (32, 32),
            sampling_ratio: (2, 2),
        }
    }
}

fn check_output(size: (usize, usize)) -> Result<()> {
    if size.0 == 0 || size.1 == 0 {
        return Err(Error::Precondition("output size must be positive".into()));
    }
    Ok(())
}

fn check_overlap(fm: &FeatureMap, roi: &BBox) -> Result<()> {
    if !roi.is_valid() || fm.image_extent().intersection_area(roi) <= 0.0 {
        return Err(Error::Precondition(format!(
            "roi {:?} does not overlap the {}x{} feature map",
            <[f64; 4]>::from(*roi),
            fm.width,
            fm.height
        )));
    }
    Ok(())
}

/// Integer bin `[start, end)` of `len` cells split `n` ways, offset by `origin`.
fn pool_bin(origin: i64, len: i64, n: usize, k: usize) -> (i64, i64) {
    let (n, k) = (n as i64, k as i64);
    let start = origin + (k * len).div_euclid(n);
    let end = origin + ((k + 1) * len + n - 1).div_euclid(n);
    (start, end)
}

/// Quantized RoI max pooling. The roi is snapped outward to whole cells
/// (floor of the start, ceiling of the end), split into integer bins, and each
/// bin keeps the maximum of its cells; bins falling off the map produce 0.
pub fn roi_pool(fm: &FeatureMap, roi: &BBox, cfg: &RoiPoolConfig) -> Result<FeatureMap> {
    check_output(cfg.output_size)?;
    check_overlap(fm, roi)?;
    let (oh, ow) = cfg.output_size;
    let c0 = (roi.x_min / fm.stride).floor() as i64;
    let r0 = (roi.y_min / fm.stride).floor() as i64;
    let cols = ((roi.x_max / fm.stride).ceil() as i64 - c0).max(1);
    let rows = ((roi.y_max / fm.stride).ceil() as i64 - r0).max(1);

    let mut out = Vec::with_capacity(fm.channels * oh * ow);
    for c in 0..fm.channels {
        for py in 0..oh {
            let (ys, ye) = pool_bin(r0, rows, oh, py);
            let (ys, ye) = (ys.max(0), ye.min(fm.height as i64));
            for px in 0..ow {
                let (xs, xe) = pool_bin(c0, cols, ow, px);
                let (xs, xe) = (xs.max(0), xe.min(fm.width as i64));
                let mut best = f64::NEG_INFINITY;
                for y in ys..ye {
                    for x in xs..xe {
                        best = best.max(fm.get(c, y as usize, x as usize));
                    }
                }
                out.push(if best == f64::NEG_INFINITY { 0.0 } else { best });
            }
        }
    }
    FeatureMap::new(fm.channels, oh, ow, 1.0, out)
}

/// Bilinear value at cell coordinates `(y, x)`; samples beyond the map's
/// extent are 0, samples within it clamp to the edge cells.
fn bilinear(fm: &FeatureMap, c: usize, y: f64, x: f64) -> f64 {
    let (h, w) = (fm.height as f64, fm.width as f64);
    if y < -0.5 || x < -0.5 || y > h - 0.5 || x > w - 0.5 {
        return 0.0;
    }
    let y = y.clamp(0.0, h - 1.0);
    let x = x.clamp(0.0, w - 1.0);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(fm.height - 1), (x0 + 1).min(fm.width - 1));
    let (ly, lx) = (y - y0 as f64, x - x0 as f64);
    (1.0 - ly) * (1.0 - lx) * fm.get(c, y0, x0)
        + (1.0 - ly) * lx * fm.get(c, y0, x1)
        + ly * (1.0 - lx) * fm.get(c, y1, x0)
        + ly * lx * fm.get(c, y1, x1)
}

/// RoIAlign: each output bin averages a regular grid of bilinear samples taken
/// at the roi's exact (unquantized) position.
pub fn roi_align(fm: &FeatureMap, roi: &BBox, cfg: &RoiAlignConfig) -> Result<FeatureMap> {
    check_output(cfg.output_size)?;
    let (sy, sx) = cfg.sampling_ratio;
    if sy == 0 || sx == 0 {
        return Err(Error::Precondition("sampling ratio must be positive".into()));
    }
    if roi.area() <= 0.0 {
        return Err(Error::Precondition("roi has zero area".into()));
    }
    check_overlap(fm, roi)?;
    let (oh, ow) = cfg.output_size;
    // image pixels -> cell coordinates with cell centres at integers
    let x1 = roi.x_min / fm.stride - 0.5;
    let y1 = roi.y_min / fm.stride - 0.5;
    let bin_w = (roi.x_max - roi.x_min) / fm.stride / ow as f64;
    let bin_h = (roi.y_max - roi.y_min) / fm.stride / oh as f64;
    let n = (sy * sx) as f64;

    let mut out = Vec::with_capacity(fm.channels * oh * ow);
    for c in 0..fm.channels {
        for py in 0..oh {
            for px in 0..ow {
                let mut sum = 0.0;
                for iy in 0..sy {
                    let y = y1 + (py as f64 + (iy as f64 + 0.5) / sy as f64) * bin_h;
                    for ix in 0..sx {
                        let x = x1 + (px as f64 + (ix as f64 + 0.5) / sx as f64) * bin_w;
                        sum += bilinear(fm, c, y, x);
                    }
                }
                out.push(sum / n);
            }
        }
    }
    FeatureMap::new(fm.channels, oh, ow, 1.0, out)
}
