//! COCO-style AP of a detections file against a ground-truth dataset.

use std::path::PathBuf;

use parcelsight::dataset::load_annotations;
use parcelsight::detection_geom::read_detections_file;
use parcelsight::evaluation::{evaluate, format_table, EvalConfig, IouKind};

fn main() -> parcelsight::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eval");
    let gt = load_annotations(dir.join("gt"))?;
    let dets = read_detections_file(dir.join("detections.jsonl"))?;
    println!("{} images, {} detections\n", gt.len(), dets.len());

    let summaries = [IouKind::Bbox, IouKind::Mask]
        .into_iter()
        .map(|k| evaluate(&gt, &dets, &EvalConfig { iou_kind: k, ..Default::default() }))
        .collect::<parcelsight::Result<Vec<_>>>()?;
    print!("{}", format_table(&summaries));
    Ok(())
}
