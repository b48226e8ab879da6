mod common;

use common::{brute_evaluate, fixture, BruteReport};
use parcelsight::dataset::load_annotations;
use parcelsight::detection_geom::read_detections_file;
use parcelsight::evaluation::{evaluate, EvalConfig, EvalSummary, IouKind};
use serde_json::Value;

fn rows(s: &EvalSummary) -> BruteReport {
    let mut out = BruteReport::new();
    for (label, m) in &s.classes {
        out.insert(label.to_string(), m.values());
    }
    out.insert("overall".into(), s.overall.values());
    out
}

fn assert_close(got: &BruteReport, want: &BruteReport, tol: f64, what: &str) {
    assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>(), "{what}");
    for (k, g) in got {
        for (i, (a, b)) in g.iter().zip(&want[k]).enumerate() {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= tol, "{what} {k}[{i}]: {a} vs {b}"),
                (None, None) => {}
                _ => panic!("{what} {k}[{i}]: {a:?} vs {b:?}"),
            }
        }
    }
}

fn run(kind: IouKind) -> BruteReport {
    let gt = load_annotations(fixture("eval/gt")).unwrap();
    let dets = read_detections_file(fixture("eval/detections.jsonl")).unwrap();
    let cfg = EvalConfig { iou_kind: kind, ..Default::default() };
    rows(&evaluate(&gt, &dets, &cfg).unwrap())
}

#[test]
fn fixture_matches_brute_force_evaluator() {
    let gt = load_annotations(fixture("eval/gt")).unwrap();
    let dets = read_detections_file(fixture("eval/detections.jsonl")).unwrap();
    for (kind, mask) in [(IouKind::Bbox, false), (IouKind::Mask, true)] {
        assert_close(&run(kind), &brute_evaluate(&gt, &dets, mask), 1e-12, kind.as_str());
    }
}

#[test]
fn fixture_matches_pycocotools_reference() {
    let text = std::fs::read_to_string(fixture("eval/pycocotools_reference.json")).unwrap();
    let reference: Value = serde_json::from_str(&text).unwrap();
    for kind in [IouKind::Bbox, IouKind::Mask] {
        let mut want = BruteReport::new();
        for (scope, vals) in reference[kind.as_str()].as_object().unwrap() {
            let arr: Vec<Option<f64>> = vals.as_array().unwrap().iter().map(Value::as_f64).collect();
            want.insert(scope.clone(), arr.try_into().unwrap());
        }
        // pycocotools adds a tiny epsilon to precision denominators
        assert_close(&run(kind), &want, 1e-9, kind.as_str());
    }
}

mod randomized {
    use super::*;
    use common::Rng;
    use parcelsight::annotation::{polygon_to_mask, rle_encode, BBox, Label};
    use parcelsight::dataset::{ImageAnnotations, Instance};
    use parcelsight::detection_geom::Detection;

    const SIZE: usize = 128;

    fn rect(rng: &mut Rng) -> BBox {
        // integer corners make exact IoU ties and area-boundary hits likely
        let w = 4 + rng.below(100) as usize;
        let h = 4 + rng.below(100) as usize;
        let x = rng.below((SIZE - w.min(SIZE - 1)) as u64) as f64;
        let y = rng.below((SIZE - h.min(SIZE - 1)) as u64) as f64;
        BBox::new(x, y, (x + w as f64).min(SIZE as f64), (y + h as f64).min(SIZE as f64))
    }

    fn mask_of(b: &BBox) -> parcelsight::annotation::RleMask {
        let poly = [(b.x_min, b.y_min), (b.x_max, b.y_min), (b.x_max, b.y_max), (b.x_min, b.y_max)];
        rle_encode(&polygon_to_mask(&poly, SIZE, SIZE))
    }

    fn scenario(seed: u64) -> (Vec<ImageAnnotations>, Vec<Detection>) {
        let mut rng = Rng::new(seed);
        let mut gt = Vec::new();
        let mut dets = Vec::new();
        for i in 0..3 {
            let name = format!("im{i}");
            let mut instances = Vec::new();
            for k in 0..rng.below(6) {
                let b = rect(&mut rng);
                let label = if rng.below(2) == 0 { Label::Vehicle } else { Label::ParkingSpace };
                instances.push(Instance { instance_id: k as u32, label, bbox: b, rle: mask_of(&b) });
            }
            for _ in 0..rng.below(9) {
                // half the detections are perturbed copies of a ground truth box
                let (b, label) = match instances.get(rng.below(instances.len() as u64 + 1) as usize) {
                    Some(g) if rng.below(2) == 0 => {
                        let d = |r: &mut Rng| r.below(7) as f64 - 3.0;
                        let bb = g.bbox;
                        let b = BBox::new(
                            (bb.x_min + d(&mut rng)).max(0.0),
                            (bb.y_min + d(&mut rng)).max(0.0),
                            (bb.x_max + d(&mut rng)).min(SIZE as f64),
                            (bb.y_max + d(&mut rng)).min(SIZE as f64),
                        );
                        (if b.is_valid() { b } else { bb }, g.label)
                    }
                    _ => (rect(&mut rng), if rng.below(2) == 0 { Label::Vehicle } else { Label::ParkingSpace }),
                };
                let score = rng.below(5) as f64 / 4.0; // frequent score ties
                dets.push(Detection { image_id: name.clone(), label, score, bbox: b, rle: Some(mask_of(&b)) });
            }
            gt.push(ImageAnnotations { name, width: SIZE, height: SIZE, instances });
        }
        (gt, dets)
    }

    #[test]
    fn random_scenes_match_brute_force() {
        for seed in 0..60 {
            let (gt, dets) = scenario(seed);
            for (kind, mask) in [(IouKind::Bbox, false), (IouKind::Mask, true)] {
                let cfg = EvalConfig { iou_kind: kind, ..Default::default() };
                let got = rows(&evaluate(&gt, &dets, &cfg).unwrap());
                let want = brute_evaluate(&gt, &dets, mask);
                // classes absent from both ground truth and detections may be omitted
                let want: BruteReport = want.into_iter().filter(|(k, _)| got.contains_key(k)).collect();
                assert_close(&got, &want, 1e-12, &format!("seed {seed} {}", kind.as_str()));
            }
        }
    }
}
