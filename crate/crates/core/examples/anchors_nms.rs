//! Anchor grid, proposal selection and FPN level assignment.

use parcelsight::annotation::BBox;
use parcelsight::detection_geom::{
    fpn_assign_level, generate_anchors, select_proposals, AnchorConfig, FpnConfig, Proposal, ProposalConfig,
};

fn main() -> parcelsight::Result<()> {
    let cfg = AnchorConfig::default();
    let anchors = generate_anchors(&cfg, 2, 2);
    println!("{} anchors per location, {} on a 2x2 map", cfg.anchors_per_location(), anchors.len());
    for a in &anchors[..cfg.anchors_per_location()] {
        println!("  [{:8.2} {:8.2} {:8.2} {:8.2}]  {:.0}x{:.0}", a.x_min, a.y_min, a.x_max, a.y_max, a.width(), a.height());
    }

    // three overlapping candidates and one isolated one
    let props = vec![
        Proposal::new(100.0, 100.0, 80.0, 40.0, 0.95)?,
        Proposal::new(104.0, 102.0, 80.0, 40.0, 0.90)?,
        Proposal::new(130.0, 100.0, 80.0, 40.0, 0.60)?,
        Proposal::new(400.0, 300.0, 50.0, 50.0, 0.70)?,
    ];
    let kept = select_proposals(&props, &ProposalConfig::default());
    println!("{} of {} proposals survive NMS:", kept.len(), props.len());
    for p in &kept {
        println!("  centre ({}, {}) score {}", p.center_x, p.center_y, p.objectness);
    }

    let fpn = FpnConfig::default();
    for side in [32.0, 112.0, 224.0, 448.0, 1000.0] {
        println!("{side:>6} px box -> P{}", fpn_assign_level(&BBox::new(0.0, 0.0, side, side), &fpn));
    }
    Ok(())
}
