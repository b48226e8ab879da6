//! The whole pipeline on the bundled fixture: stitch, crop parcels, annotate
//! the crops, score detections and assess occupancy.

use std::path::PathBuf;

use parcelsight::annotation::{BBox, Label};
use parcelsight::dataset::{ImageAnnotations, Instance};
use parcelsight::detection_geom::Detection;
use parcelsight::evaluation::{evaluate, format_table, EvalConfig};
use parcelsight::occupancy::{occupancy_from_bboxes, DEFAULT_THRESHOLD};
use parcelsight::parcel_extract::{extract_all, BitMask, ExtractOptions};
use parcelsight::raster_io::read_png;

fn rect(label: Label, id: u32, b: BBox, w: usize, h: usize) -> Instance {
    let mut m = BitMask::new(w, h);
    for y in b.y_min as usize..b.y_max as usize {
        for x in b.x_min as usize..b.x_max as usize {
            m.set(x, y, true);
        }
    }
    Instance { instance_id: id, label, bbox: b, rle: parcelsight::annotation::rle_encode(&m) }
}

fn main() -> parcelsight::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e");
    let out = std::env::temp_dir().join("parcelsight_e2e");
    let manifest = extract_all(
        &[dir.join("e2e_west.tif"), dir.join("e2e_east.tif")],
        &[dir.join("parcels.shp")],
        Some(&"HAS_LOT == yes".parse()?),
        &out,
        &ExtractOptions { parcel_crs: 32615, ..Default::default() },
    )?;

    let mut gt = Vec::new();
    let mut dets = Vec::new();
    for e in manifest.iter().filter(|e| e.is_ok()) {
        let png = e.png_path.clone().unwrap();
        let img = read_png(out.join(&png))?;
        let (w, h) = (img.width as f64, img.height as f64);
        let name = png.trim_end_matches(".png").to_string();
        let space = BBox::new(0.0, 0.0, w, h);
        let car = BBox::new(1.0, 1.0, w - 1.0, (h / 2.0).floor());
        gt.push(ImageAnnotations {
            name: name.clone(),
            width: img.width,
            height: img.height,
            instances: vec![rect(Label::ParkingSpace, 0, space, img.width, img.height), rect(Label::Vehicle, 1, car, img.width, img.height)],
        });
        // a detector that finds the space and a slightly loose car box
        let loose = BBox::new(1.0, 1.0, w - 1.0, car.y_max + 1.0);
        dets.push(Detection { image_id: name.clone(), label: Label::ParkingSpace, score: 0.9, bbox: space, rle: None });
        dets.push(Detection { image_id: name.clone(), label: Label::Vehicle, score: 0.8, bbox: loose, rle: None });

        let report = occupancy_from_bboxes(&[space], &[loose], DEFAULT_THRESHOLD)?;
        println!("{name}: {}x{} crop, {}/{} spaces occupied", img.width, img.height, report.occupied_count, report.total_spaces);
    }
    let summary = evaluate(&gt, &dets, &EvalConfig::default())?;
    print!("\n{}", format_table(&[summary]));
    Ok(())
}
