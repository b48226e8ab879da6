//! Which spaces are taken? Masks vs boxes on a slanted lot.

use parcelsight::annotation::{polygon_to_bbox, polygon_to_mask, rle_encode};
use parcelsight::occupancy::{assess_occupancy, occupancy_from_bboxes, render_overlay, DEFAULT_THRESHOLD};
use parcelsight::raster_io::{write_rgb_png, RgbImage};

fn main() -> parcelsight::Result<()> {
    let (w, h) = (60, 30);
    // three slanted stalls; the third car sits in the gap between stalls 1
    // and 2, inside stall 1's bounding box but outside its outline
    let spaces: Vec<Vec<(f64, f64)>> = (0..3)
        .map(|i| {
            let x = 4.0 + 18.0 * i as f64;
            vec![(x, 2.0), (x + 12.0, 2.0), (x + 18.0, 28.0), (x + 6.0, 28.0)]
        })
        .collect();
    let cars = [
        vec![(7.0, 5.0), (15.0, 5.0), (19.0, 24.0), (11.0, 24.0)],
        vec![(44.0, 4.0), (50.0, 4.0), (55.0, 16.0), (49.0, 16.0)],
        vec![(35.5, 3.0), (39.5, 3.0), (39.5, 9.0), (35.5, 9.0)],
    ];

    let space_masks: Vec<_> = spaces.iter().map(|p| rle_encode(&polygon_to_mask(p, w, h))).collect();
    let car_masks: Vec<_> = cars.iter().map(|p| rle_encode(&polygon_to_mask(p, w, h))).collect();
    let by_mask = assess_occupancy(&space_masks, &car_masks, DEFAULT_THRESHOLD)?;

    let space_boxes: Vec<_> = spaces.iter().map(|p| polygon_to_bbox(p)).collect();
    let car_boxes: Vec<_> = cars.iter().map(|p| polygon_to_bbox(p)).collect();
    let by_box = occupancy_from_bboxes(&space_boxes, &car_boxes, DEFAULT_THRESHOLD)?;

    println!("space  mask  coverage   box  coverage");
    for (m, b) in by_mask.spaces.iter().zip(&by_box.spaces) {
        println!("{:>5}  {:>5}  {:>7.3}  {:>5}  {:>7.3}", m.space_id, m.occupied, m.coverage_fraction, b.occupied, b.coverage_fraction);
    }
    println!("utilization: masks {:.0}%, boxes {:.0}%", by_mask.utilization * 100.0, by_box.utilization * 100.0);

    let overlay = render_overlay(&RgbImage::new(w, h), &space_masks, &by_mask)?;
    let out = std::env::temp_dir().join("parcelsight_occupancy.png");
    write_rgb_png(&overlay, &out)?;
    println!("overlay: {}", out.display());
    Ok(())
}
