//! Greedy score-ordered matching, precision/recall accumulation and
//! 101-point interpolated AP.

use serde::{Deserialize, Serialize};

use crate::annotation::Label;

/// One detection after matching at a given threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub score: f64,
    /// Position in the detections file; breaks score ties.
    pub order: usize,
    pub true_positive: bool,
    /// Excluded from both TP and FP counts (matched an ignored ground truth,
    /// or unmatched and outside the area range).
    pub ignored: bool,
}

/// Greedy matching of score-sorted detections against ground truth.
///
/// `ious[d][g]` holds the overlap of the `d`-th detection (already in score
/// order) with ground truth `g`. Ground truth flagged in `gt_ignore` is only
/// used once no regular ground truth can be matched. Among equally good
/// candidates the later one in `gt` order wins.
pub(crate) fn greedy_match(ious: &[Vec<f64>], gt_ignore: &[bool], threshold: f64) -> Vec<Option<usize>> {
    let gt_order: Vec<usize> = (0..gt_ignore.len())
        .filter(|&g| !gt_ignore[g])
        .chain((0..gt_ignore.len()).filter(|&g| gt_ignore[g]))
        .collect();
    let mut gt_taken = vec![false; gt_ignore.len()];
    let mut out = Vec::with_capacity(ious.len());
    for row in ious {
        let mut best = threshold.min(1.0 - 1e-10);
        let mut m: Option<usize> = None;
        for &g in &gt_order {
            if gt_taken[g] {
                continue;
            }
            if let Some(prev) = m {
                if !gt_ignore[prev] && gt_ignore[g] {
                    break;
                }
            }
            if row[g] < best {
                continue;
            }
            best = row[g];
            m = Some(g);
        }
        if let Some(g) = m {
            gt_taken[g] = true;
        }
        out.push(m);
    }
    out
}

/// Result of [`match_detections`], indexed like the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub det_to_gt: Vec<Option<usize>>,
    pub gt_to_det: Vec<Option<usize>>,
}

/// Match one image's detections to its ground truth: highest score first,
/// each to the free same-class ground truth with the highest IoU at or above
/// `iou_threshold`. `iou(d, g)` supplies the overlaps.
pub fn match_detections(
    gt_labels: &[Label],
    det_labels: &[Label],
    det_scores: &[f64],
    iou_threshold: f64,
    iou: impl Fn(usize, usize) -> f64,
) -> Matching {
    let mut order: Vec<usize> = (0..det_labels.len()).collect();
    order.sort_by(|&a, &b| det_scores[b].total_cmp(&det_scores[a]));
    let mut m = Matching {
        det_to_gt: vec![None; det_labels.len()],
        gt_to_det: vec![None; gt_labels.len()],
    };
    for label in Label::ALL {
        let gts: Vec<usize> = (0..gt_labels.len()).filter(|&g| gt_labels[g] == label).collect();
        let dets: Vec<usize> = order.iter().copied().filter(|&d| det_labels[d] == label).collect();
        let ious: Vec<Vec<f64>> = dets.iter().map(|&d| gts.iter().map(|&g| iou(d, g)).collect()).collect();
        for (k, hit) in greedy_match(&ious, &vec![false; gts.len()], iou_threshold).into_iter().enumerate() {
            if let Some(j) = hit {
                m.det_to_gt[dets[k]] = Some(gts[j]);
                m.gt_to_det[gts[j]] = Some(dets[k]);
            }
        }
    }
    m
}

/// Cumulative precision (with the monotone envelope applied) and recall at
/// every pooled detection, in descending score order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

/// `None` when there is no ground truth to recall.
pub fn precision_recall_curve(matches: &[ScoredMatch], num_gt: usize) -> Option<PrCurve> {
    if num_gt == 0 {
        return None;
    }
    let mut sorted = matches.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.order.cmp(&b.order)));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = PrCurve {
        recall: Vec::with_capacity(sorted.len()),
        precision: Vec::with_capacity(sorted.len()),
    };
    for m in sorted {
        if !m.ignored {
            if m.true_positive {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        curve.recall.push(tp as f64 / num_gt as f64);
        curve.precision.push(if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 });
    }
    for i in (1..curve.precision.len()).rev() {
        if curve.precision[i] > curve.precision[i - 1] {
            curve.precision[i - 1] = curve.precision[i];
        }
    }
    Some(curve)
}

/// Recall sample points `0, 0.01, ..., 1`.
pub fn recall_grid() -> [f64; 101] {
    let mut g = [0.0; 101];
    for (i, r) in g.iter_mut().enumerate() {
        *r = i as f64 * 0.01;
    }
    g[100] = 1.0;
    g
}

/// 101-point interpolated AP: mean over the recall grid of the envelope
/// precision at the first point reaching that recall (0 past the last point).
pub fn average_precision(curve: Option<&PrCurve>) -> Option<f64> {
    let curve = curve?;
    let mut sum = 0.0;
    for r in recall_grid() {
        let i = curve.recall.partition_point(|&x| x < r);
        if i < curve.precision.len() {
            sum += curve.precision[i];
        }
    }
    Some(sum / 101.0)
}
