//! Turn a LabelMe annotation into boxes and COCO-style RLE masks.

use std::path::PathBuf;

use parcelsight::annotation::rle_decode;
use parcelsight::dataset::import_labelme;

fn main() -> parcelsight::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labelme/lot_five.json");
    let img = import_labelme(&path)?;
    let a = &img.annotations;
    println!("{}: {}x{}", a.name, a.width, a.height);
    for inst in &a.instances {
        let counts = inst.rle.counts();
        println!(
            "  #{} {:<13} bbox {:?} area {:>4} runs {} (first {:?})",
            inst.instance_id,
            inst.label,
            inst.bbox,
            inst.rle.area(),
            counts.len(),
            &counts[..counts.len().min(4)]
        );
    }

    // draw the first vehicle as ASCII art
    let car = a.instances.iter().find(|i| i.label.as_str() == "vehicle").unwrap();
    let m = rle_decode(&car.rle)?;
    for y in 0..a.height {
        let row: String = (0..a.width).map(|x| if m.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
    Ok(())
}
