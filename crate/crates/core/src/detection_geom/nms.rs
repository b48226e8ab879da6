use serde::{Deserialize, Serialize};

use super::iou_box;
use crate::annotation::BBox;
use crate::error::{Error, Result};

/// Anything NMS can rank and compare.
pub trait Scored {
    fn score(&self) -> f64;
    fn bbox(&self) -> BBox;
}

/// A region proposal in absolute image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
    pub objectness: f64,
}

impl Proposal {
    pub fn new(center_x: f64, center_y: f64, width: f64, height: f64, objectness: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::Precondition(format!("proposal size {width}x{height} must be positive")));
        }
        if !(0.0..=1.0).contains(&objectness) {
            return Err(Error::Precondition(format!("objectness {objectness} outside [0, 1]")));
        }
        Ok(Self {
            center_x,
            center_y,
            width,
            height,
            objectness,
        })
    }
}

impl Scored for Proposal {
    fn score(&self) -> f64 {
        self.objectness
    }

    fn bbox(&self) -> BBox {
        BBox::from_center(self.center_x, self.center_y, self.width, self.height)
    }
}

/// Positions of `items` sorted by descending score; equal scores keep input order.
fn score_order<T: Scored>(items: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[b].score().total_cmp(&items[a].score()));
    order
}

/// Greedy NMS returning the indices of kept items, best first. An item is
/// suppressed when its IoU with an already kept item exceeds the threshold.
pub fn nms_indices<T: Scored>(items: &[T], iou_threshold: f64) -> Vec<usize> {
    let boxes: Vec<BBox> = items.iter().map(Scored::bbox).collect();
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(items) {
        if kept.iter().all(|&k| iou_box(&boxes[k], &boxes[i]) <= iou_threshold) {
            kept.push(i);
        }
    }
    kept
}

pub fn nms<T: Scored + Clone>(items: &[T], iou_threshold: f64) -> Vec<T> {
    nms_indices(items, iou_threshold).into_iter().map(|i| items[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalConfig {
    pub pre_nms_top_k: usize,
    pub iou_threshold: f64,
    /// Optional hard cap after NMS; unset keeps every survivor.
    pub post_nms_cap: Option<usize>,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            pre_nms_top_k: 15_000,
            iou_threshold: 0.5,
            post_nms_cap: None,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config(format!("iou_threshold {} outside (0, 1]", self.iou_threshold)));
        }
        Ok(())
    }
}

/// Sort by objectness, keep the top `pre_nms_top_k`, suppress, then cap.
pub fn select_proposals(proposals: &[Proposal], cfg: &ProposalConfig) -> Vec<Proposal> {
    let top: Vec<Proposal> = score_order(proposals)
        .into_iter()
        .take(cfg.pre_nms_top_k)
        .map(|i| proposals[i])
        .collect();
    let mut kept = nms(&top, cfg.iou_threshold);
    if let Some(cap) = cfg.post_nms_cap {
        kept.truncate(cap);
    }
    kept
}
