//! Non-learned detector geometry: anchors, IoU, NMS, proposal selection,
//! RoI resampling and pyramid level assignment, plus the detection
//! interchange records.

mod detections;
mod nms;
mod roi;

pub use detections::{read_detections, read_detections_file, write_detections, Detection};
pub use nms::{nms, nms_indices, select_proposals, Proposal, ProposalConfig, Scored};
pub use roi::{roi_align, roi_pool, FeatureMap, RoiAlignConfig, RoiPoolConfig};

use serde::{Deserialize, Serialize};

use crate::annotation::{BBox, RleMask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorConfig {
    pub scales: Vec<f64>,
    /// Width:height ratios.
    pub aspect_ratios: Vec<f64>,
    pub stride: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            scales: vec![128.0, 256.0, 512.0],
            aspect_ratios: vec![0.5, 1.0, 2.0],
            stride: 16.0,
        }
    }
}

impl AnchorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0);
        if !positive(&self.scales) || !positive(&self.aspect_ratios) {
            return Err(Error::Config("anchor scales and ratios must be non-empty and positive".into()));
        }
        if !(self.stride.is_finite() && self.stride > 0.0) {
            return Err(Error::Config(format!("anchor stride {} must be positive", self.stride)));
        }
        Ok(())
    }

    pub fn anchors_per_location(&self) -> usize {
        self.scales.len() * self.aspect_ratios.len()
    }
}

/// Anchors for every cell of an `fm_width x fm_height` feature map, row-major
/// over cells, then scale-major, then ratio. Boxes are not clipped.
pub fn generate_anchors(cfg: &AnchorConfig, fm_width: usize, fm_height: usize) -> Vec<BBox> {
    let mut out = Vec::with_capacity(fm_width * fm_height * cfg.anchors_per_location());
    for i in 0..fm_height {
        for j in 0..fm_width {
            let cx = (j as f64 + 0.5) * cfg.stride;
            let cy = (i as f64 + 0.5) * cfg.stride;
            for &s in &cfg.scales {
                for &r in &cfg.aspect_ratios {
                    let sr = r.sqrt();
                    out.push(BBox::from_center(cx, cy, s * sr, s / sr));
                }
            }
        }
    }
    out
}

pub fn iou_box(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn iou_mask(a: &RleMask, b: &RleMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpnConfig {
    pub k0: i32,
    pub canonical: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl Default for FpnConfig {
    fn default() -> Self {
        Self {
            k0: 4,
            canonical: 224.0,
            k_min: 2,
            k_max: 5,
        }
    }
}

/// `clamp(k0 + floor(log2(sqrt(w*h) / canonical)), k_min, k_max)`.
/// Degenerate boxes land on `k_min`.
pub fn fpn_assign_level(roi: &BBox, cfg: &FpnConfig) -> i32 {
    let size = roi.area().sqrt();
    if size.is_nan() || size <= 0.0 {
        return cfg.k_min;
    }
    let k = cfg.k0 as f64 + (size / cfg.canonical).log2().floor();
    (k.clamp(cfg.k_min as f64, cfg.k_max as f64)) as i32
}
