//! Independent reference implementations shared by the integration and
//! acceptance tests. They favour directness over speed and share no code
//! paths with the library beyond its data types.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use parcelsight::annotation::{rle_decode, BBox, Label, RleMask};
use parcelsight::dataset::ImageAnnotations;
use parcelsight::detection_geom::Detection;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Even-odd crossing test (W. R. Franklin's PNPOLY) over all rings.
pub fn pnpoly(rings: &[Vec<(f64, f64)>], x: f64, y: f64) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[j], ring[i]);
            if (b.1 > y) != (a.1 > y) && x < (b.0 - a.0) * (y - a.1) / (b.1 - a.1) + a.0 {
                inside = !inside;
            }
            j = i;
        }
    }
    inside
}

/// Small deterministic generator for test data (xorshift64*).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Box IoU by counting unit cells of an integer grid.
pub fn iou_by_cells(a: &BBox, b: &BBox) -> f64 {
    let lo_x = a.x_min.min(b.x_min) as i64;
    let lo_y = a.y_min.min(b.y_min) as i64;
    let hi_x = a.x_max.max(b.x_max) as i64;
    let hi_y = a.y_max.max(b.y_max) as i64;
    let inside = |bx: &BBox, x: f64, y: f64| x > bx.x_min && x < bx.x_max && y > bx.y_min && y < bx.y_max;
    let (mut inter, mut union) = (0u64, 0u64);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let (ia, ib) = (inside(a, cx, cy), inside(b, cx, cy));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn plain_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Textbook greedy NMS: take the best remaining box (ties to the lower
/// index), drop every remaining box overlapping it by more than `thr`, repeat.
pub fn nms_oracle(boxes: &[BBox], scores: &[f64], thr: f64) -> Vec<usize> {
    let mut alive = vec![true; boxes.len()];
    let mut kept = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..boxes.len() {
            if alive[i] && best.is_none_or(|b| scores[i] > scores[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        kept.push(b);
        alive[b] = false;
        for i in 0..boxes.len() {
            if alive[i] && plain_iou(&boxes[b], &boxes[i]) > thr {
                alive[i] = false;
            }
        }
    }
    kept
}

fn dense(r: &RleMask) -> Vec<bool> {
    rle_decode(r).unwrap().bits().to_vec()
}

fn dense_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Six metrics per class (label name) plus "overall", `None` where undefined.
pub type BruteReport = BTreeMap<String, [Option<f64>; 6]>;

/// Brute-force COCO-style evaluator.
///
/// For every (class, area range, threshold): walk each image's detections in
/// score order (file order on ties, at most 100), give each the free ground
/// truth maximizing (not ignored, IoU, position) among those with IoU >= t,
/// then pool, count precision/recall over non-ignored detections and average
/// the best precision at recall >= r for r = 0, 0.01, ..., 1.
pub fn brute_evaluate(gt: &[ImageAnnotations], dets: &[Detection], mask: bool) -> BruteReport {
    let thresholds: Vec<f64> = (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect();
    let ranges = [(0.0, f64::INFINITY), (0.0, 1024.0), (1024.0, 9216.0), (9216.0, f64::INFINITY)];
    let mut report = BruteReport::new();
    let mut per_class: Vec<[Option<f64>; 6]> = Vec::new();
    let det_px: Vec<Vec<bool>> = dets.iter().map(|d| if mask { dense(d.rle.as_ref().unwrap()) } else { Vec::new() }).collect();
    let gt_px: Vec<Vec<Vec<bool>>> = gt
        .iter()
        .map(|img| img.instances.iter().map(|i| if mask { dense(&i.rle) } else { Vec::new() }).collect())
        .collect();
    let mut iou_cache: std::collections::HashMap<(usize, usize), f64> = Default::default();

    for label in [Label::ParkingSpace, Label::Vehicle] {
        // ap[range][threshold]
        let mut ap = vec![vec![None; thresholds.len()]; ranges.len()];
        for (ri, &(lo, hi)) in ranges.iter().enumerate() {
            for (ti, &t) in thresholds.iter().enumerate() {
                let mut pooled: Vec<(f64, usize, bool)> = Vec::new(); // score, line, tp (non-ignored only)
                let mut npos = 0usize;
                for (ii, img) in gt.iter().enumerate() {
                    let g: Vec<_> = img.instances.iter().enumerate().filter(|(_, i)| i.label == label).collect();
                    let g_area: Vec<f64> = g
                        .iter()
                        .map(|(k, i)| if mask { gt_px[ii][*k].iter().filter(|b| **b).count() as f64 } else { i.bbox.area() })
                        .collect();
                    let g_ign: Vec<bool> = g_area.iter().map(|&a| !(a >= lo && a < hi)).collect();
                    npos += g_ign.iter().filter(|x| !**x).count();
                    // non-ignored first, stable
                    let mut g_order: Vec<usize> = (0..g.len()).filter(|&k| !g_ign[k]).collect();
                    g_order.extend((0..g.len()).filter(|&k| g_ign[k]));

                    let mut d: Vec<(usize, &Detection)> =
                        dets.iter().enumerate().filter(|(_, x)| x.image_id == img.name && x.label == label).collect();
                    d.sort_by(|a, b| b.1.score.partial_cmp(&a.1.score).unwrap().then(a.0.cmp(&b.0)));
                    d.truncate(100);

                    let mut taken = vec![false; g.len()];
                    for &(line, det) in &d {
                        let mut best: Option<(bool, f64, usize, usize)> = None; // (!ignored, iou, pos, gt)
                        for (pos, &k) in g_order.iter().enumerate() {
                            if taken[k] {
                                continue;
                            }
                            let iou = if mask {
                                *iou_cache.entry((line, g[k].0 * gt.len() + ii)).or_insert_with(|| dense_iou(&det_px[line], &gt_px[ii][g[k].0]))
                            } else {
                                plain_iou(&det.bbox, &g[k].1.bbox)
                            };
                            if iou < t {
                                continue;
                            }
                            let key = (!g_ign[k], iou, pos, k);
                            let better = match best {
                                None => true,
                                Some(b) => (key.0, key.1, key.2) > (b.0, b.1, b.2),
                            };
                            if better {
                                best = Some(key);
                            }
                        }
                        match best {
                            Some((_, _, _, k)) => {
                                taken[k] = true;
                                if !g_ign[k] {
                                    pooled.push((det.score, line, true));
                                }
                            }
                            None => {
                                let a = if mask {
                                    det_px[line].iter().filter(|b| **b).count() as f64
                                } else {
                                    det.bbox.area()
                                };
                                if a >= lo && a < hi {
                                    pooled.push((det.score, line, false));
                                }
                            }
                        }
                    }
                }
                if npos == 0 {
                    continue;
                }
                pooled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                let mut pts = Vec::new();
                let (mut tp, mut fp) = (0usize, 0usize);
                for &(_, _, hit) in &pooled {
                    if hit {
                        tp += 1
                    } else {
                        fp += 1
                    }
                    pts.push((tp as f64 / npos as f64, tp as f64 / (tp + fp) as f64));
                }
                let mut sum = 0.0;
                for i in 0..=100 {
                    let r = i as f64 / 100.0;
                    let best = pts.iter().filter(|p| p.0 >= r).map(|p| p.1).fold(0.0, f64::max);
                    sum += best;
                }
                ap[ri][ti] = Some(sum / 101.0);
            }
        }
        let mean = |v: &Vec<Option<f64>>| -> Option<f64> {
            let d: Option<Vec<f64>> = v.iter().copied().collect();
            d.map(|d| d.iter().sum::<f64>() / d.len() as f64)
        };
        let row = [mean(&ap[0]), ap[0][0], ap[0][5], mean(&ap[1]), mean(&ap[2]), mean(&ap[3])];
        report.insert(label.as_str().to_string(), row);
        per_class.push(row);
    }
    let mut overall = [None; 6];
    for (k, o) in overall.iter_mut().enumerate() {
        let v: Vec<f64> = per_class.iter().filter_map(|r| r[k]).collect();
        if !v.is_empty() {
            *o = Some(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    report.insert("overall".into(), overall);
    report
}

/// `n` small noisy images, each with one parking space and one vehicle.
pub fn synthetic_dataset(n: usize, size: usize, seed: u64) -> parcelsight::dataset::Dataset {
    use parcelsight::annotation::{polygon_to_bbox, polygon_to_mask, rle_encode};
    use parcelsight::dataset::{Dataset, DatasetImage, Instance};
    use parcelsight::raster_io::RgbImage;

    let mut rng = Rng::new(seed);
    let s = size as f64;
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let mut image = RgbImage::new(size, size);
        for y in 0..size {
            for x in 0..size {
                let v = rng.below(256) as u8;
                image.put(x, y, [v, v / 2, 255 - v]);
            }
        }
        let shapes = [
            (Label::ParkingSpace, [(0.1 * s, 0.1 * s), (0.9 * s, 0.1 * s), (0.9 * s, 0.6 * s), (0.1 * s, 0.6 * s)]),
            (Label::Vehicle, [(0.3 * s, 0.2 * s), (0.7 * s, 0.25 * s), (0.65 * s, 0.55 * s), (0.25 * s, 0.5 * s)]),
        ];
        let instances = shapes
            .iter()
            .enumerate()
            .map(|(k, (label, poly))| Instance {
                instance_id: k as u32,
                label: *label,
                bbox: polygon_to_bbox(poly),
                rle: rle_encode(&polygon_to_mask(poly, size, size)),
            })
            .collect();
        images.push(DatasetImage {
            annotations: ImageAnnotations { name: format!("syn_{i:04}"), width: size, height: size, instances },
            image,
        });
    }
    Dataset { images }
}

/// Every file under `root` as (relative path, bytes), sorted by path.
pub fn snapshot(root: &std::path::Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(dir: &std::path::Path, root: &std::path::Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_owned(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
