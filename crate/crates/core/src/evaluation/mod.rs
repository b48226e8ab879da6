//! COCO-style average precision over the dataset's ground truth.
//!
//! Per class, per area range and per IoU threshold, detections are matched
//! image by image, pooled, and turned into a 101-point interpolated AP. Ground
//! truth outside an area range is ignored rather than dropped, exactly as the
//! COCO evaluator does, so detections hitting it are neither TP nor FP.

mod matching;
mod report;

pub use matching::{average_precision, match_detections, precision_recall_curve, recall_grid, Matching, PrCurve, ScoredMatch};
pub use report::{format_table, EvalSummary, Metrics};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::Label;
use crate::dataset::{ImageAnnotations, Instance};
use crate::detection_geom::{iou_box, iou_mask, Detection};
use crate::error::{Error, Result};
use matching::greedy_match;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    Bbox,
    Mask,
}

impl IouKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IouKind::Bbox => "bbox",
            IouKind::Mask => "mask",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    /// Areas below this are small.
    pub small_max_area: f64,
    /// Areas at or above this are large; in between is medium.
    pub large_min_area: f64,
    pub iou_kind: IouKind,
    pub max_dets_per_image: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect(),
            small_max_area: 32.0 * 32.0,
            large_min_area: 96.0 * 96.0,
            iou_kind: IouKind::Bbox,
            max_dets_per_image: 100,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.iou_thresholds;
        if t.is_empty() || t.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("IoU thresholds {t:?} must be strictly increasing in (0, 1]")));
        }
        if !(self.small_max_area > 0.0 && self.small_max_area <= self.large_min_area) {
            return Err(Error::Config("area bucket boundaries must satisfy 0 < small <= large".into()));
        }
        if self.max_dets_per_image == 0 {
            return Err(Error::Config("max_dets_per_image must be positive".into()));
        }
        Ok(())
    }

    fn threshold_index(&self, t: f64) -> Option<usize> {
        self.iou_thresholds.iter().position(|&x| (x - t).abs() < 1e-9)
    }
}

/// Area ranges in report order: all, small, medium, large (lower-inclusive).
fn area_ranges(cfg: &EvalConfig) -> [(f64, f64); 4] {
    [
        (0.0, f64::INFINITY),
        (0.0, cfg.small_max_area),
        (cfg.small_max_area, cfg.large_min_area),
        (cfg.large_min_area, f64::INFINITY),
    ]
}

fn in_range(area: f64, (lo, hi): (f64, f64)) -> bool {
    area >= lo && area < hi
}

fn gt_area(inst: &Instance, kind: IouKind) -> f64 {
    match kind {
        IouKind::Bbox => inst.bbox.area(),
        IouKind::Mask => inst.rle.area() as f64,
    }
}

/// Matches for one (class, area range, threshold) cell plus its ground-truth count.
#[derive(Debug, Default, Clone)]
struct Cell {
    matches: Vec<ScoredMatch>,
    num_gt: usize,
}

/// `cells[class][range][threshold]`
type Cells = Vec<Vec<Vec<Cell>>>;

fn empty_cells(cfg: &EvalConfig) -> Cells {
    vec![vec![vec![Cell::default(); cfg.iou_thresholds.len()]; 4]; Label::ALL.len()]
}

fn evaluate_image(image: &ImageAnnotations, dets: &[(usize, &Detection)], cfg: &EvalConfig) -> Result<Cells> {
    let mut cells = empty_cells(cfg);
    let ranges = area_ranges(cfg);
    for (ci, label) in Label::ALL.into_iter().enumerate() {
        let gts: Vec<&Instance> = image.instances.iter().filter(|i| i.label == label).collect();
        let mut ds: Vec<(usize, &Detection)> = dets.iter().copied().filter(|(_, d)| d.label == label).collect();
        ds.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        ds.truncate(cfg.max_dets_per_image);

        let mut ious = Vec::with_capacity(ds.len());
        let mut det_areas = Vec::with_capacity(ds.len());
        for &(line, d) in &ds {
            let (row, area) = match cfg.iou_kind {
                IouKind::Bbox => (gts.iter().map(|g| iou_box(&d.bbox, &g.bbox)).collect::<Vec<_>>(), d.bbox.area()),
                IouKind::Mask => {
                    let rle = d.rle.as_ref().ok_or_else(|| {
                        Error::Schema(format!("line {}: mask evaluation needs an rle on every detection", line + 1))
                    })?;
                    let row = gts
                        .iter()
                        .map(|g| iou_mask(rle, &g.rle))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::Schema(format!("line {}: {e}", line + 1)))?;
                    (row, rle.area() as f64)
                }
            };
            ious.push(row);
            det_areas.push(area);
        }

        for (ri, &range) in ranges.iter().enumerate() {
            let gt_ignore: Vec<bool> = gts.iter().map(|g| !in_range(gt_area(g, cfg.iou_kind), range)).collect();
            let num_gt = gt_ignore.iter().filter(|&&x| !x).count();
            for (ti, &t) in cfg.iou_thresholds.iter().enumerate() {
                let cell = &mut cells[ci][ri][ti];
                cell.num_gt = num_gt;
                for (k, hit) in greedy_match(&ious, &gt_ignore, t).into_iter().enumerate() {
                    let ignored = match hit {
                        Some(g) => gt_ignore[g],
                        None => !in_range(det_areas[k], range),
                    };
                    cell.matches.push(ScoredMatch {
                        score: ds[k].1.score,
                        order: ds[k].0,
                        true_positive: hit.is_some(),
                        ignored,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().collect::<Option<Vec<_>>>()?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Evaluate detections (in file order) against ground truth images.
/// Detections for images absent from the ground truth are skipped with a warning.
pub fn evaluate(gt: &[ImageAnnotations], detections: &[Detection], cfg: &EvalConfig) -> Result<EvalSummary> {
    cfg.validate()?;
    let index: HashMap<&str, usize> = gt.iter().enumerate().map(|(i, g)| (g.name.as_str(), i)).collect();
    let mut per_image: Vec<Vec<(usize, &Detection)>> = vec![Vec::new(); gt.len()];
    let mut unknown = 0usize;
    for (line, d) in detections.iter().enumerate() {
        match index.get(d.image_id.as_str()) {
            Some(&i) => per_image[i].push((line, d)),
            None => unknown += 1,
        }
    }
    if unknown > 0 {
        log::warn!("{unknown} detections refer to images not in the ground truth; skipped");
    }

    let image_cells = gt
        .par_iter()
        .zip(per_image.par_iter())
        .map(|(img, dets)| evaluate_image(img, dets, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = empty_cells(cfg);
    for cells in image_cells {
        for (ci, by_range) in cells.into_iter().enumerate() {
            for (ri, by_t) in by_range.into_iter().enumerate() {
                for (ti, cell) in by_t.into_iter().enumerate() {
                    let p = &mut pooled[ci][ri][ti];
                    p.num_gt += cell.num_gt;
                    p.matches.extend(cell.matches);
                }
            }
        }
    }

    let t50 = cfg.threshold_index(0.5);
    let t75 = cfg.threshold_index(0.75);
    let mut per_class = Vec::with_capacity(Label::ALL.len());
    for (ci, label) in Label::ALL.into_iter().enumerate() {
        let ap: Vec<Vec<Option<f64>>> = pooled[ci]
            .iter()
            .map(|by_t| {
                by_t.iter()
                    .map(|c| average_precision(precision_recall_curve(&c.matches, c.num_gt).as_ref()))
                    .collect()
            })
            .collect();
        let metrics = Metrics {
            ap: mean(ap[0].iter().copied()),
            ap50: t50.and_then(|t| ap[0][t]),
            ap75: t75.and_then(|t| ap[0][t]),
            ap_small: mean(ap[1].iter().copied()),
            ap_medium: mean(ap[2].iter().copied()),
            ap_large: mean(ap[3].iter().copied()),
        };
        per_class.push((label, metrics));
    }
    Ok(EvalSummary::new(cfg.iou_kind, per_class))
}
