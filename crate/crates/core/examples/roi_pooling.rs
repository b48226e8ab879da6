//! RoIPool against RoIAlign on a gradient feature map.

use parcelsight::annotation::BBox;
use parcelsight::detection_geom::{roi_align, roi_pool, FeatureMap, RoiAlignConfig, RoiPoolConfig};

fn main() -> parcelsight::Result<()> {
    // value = column index, stride 4 px per cell
    let (w, h) = (16, 16);
    let fm = FeatureMap::new(1, h, w, 4.0, (0..w * h).map(|i| (i % w) as f64).collect())?;
    let pool = RoiPoolConfig { output_size: (2, 4) };
    let align = RoiAlignConfig { output_size: (2, 4), sampling_ratio: (2, 2) };

    for shift in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let roi = BBox::new(8.0 + shift, 8.0, 40.0 + shift, 24.0);
        let p = roi_pool(&fm, &roi, &pool)?;
        let a = roi_align(&fm, &roi, &align)?;
        let row = |m: &FeatureMap| (0..4).map(|x| format!("{:5.2}", m.get(0, 0, x))).collect::<Vec<_>>().join(" ");
        println!("shift {shift:3.1} px  pool [{}]  align [{}]", row(&p), row(&a));
    }
    println!("RoIPool moves in whole-cell steps; RoIAlign follows the shift smoothly.");
    Ok(())
}
