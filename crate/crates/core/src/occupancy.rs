//! Parking-space occupancy from vehicle and space instances.
//!
//! Coverage of a space by a vehicle is the share of the *vehicle's* area that
//! lies in the space. Each vehicle is assigned to the single space it covers
//! most (lower space index on ties), and a space is occupied when one of its
//! assigned vehicles reaches the threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::annotation::{rle_decode, BBox, RleMask};
use crate::error::{Error, Result};
use crate::raster_io::RgbImage;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceOccupancy {
    /// Index of the space in the input list.
    pub space_id: usize,
    pub occupied: bool,
    /// Indices of vehicles assigned to this space.
    pub covering_vehicle_ids: Vec<usize>,
    pub coverage_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub spaces: Vec<SpaceOccupancy>,
    pub total_spaces: usize,
    pub occupied_count: usize,
    pub utilization: f64,
    pub threshold: f64,
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Precondition(format!("occupancy threshold {t} outside (0, 1]")));
    }
    Ok(())
}

/// `coverage[v][s]` -> report.
fn assign(n_spaces: usize, coverage: &[Vec<f64>], threshold: f64) -> OccupancyReport {
    let mut spaces: Vec<SpaceOccupancy> = (0..n_spaces)
        .map(|space_id| SpaceOccupancy {
            space_id,
            occupied: false,
            covering_vehicle_ids: Vec::new(),
            coverage_fraction: 0.0,
        })
        .collect();
    for (v, row) in coverage.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (s, &c) in row.iter().enumerate() {
            if c > 0.0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((s, c));
            }
        }
        if let Some((s, c)) = best {
            let sp = &mut spaces[s];
            sp.covering_vehicle_ids.push(v);
            sp.coverage_fraction = sp.coverage_fraction.max(c);
            sp.occupied |= c >= threshold;
        }
    }
    let occupied_count = spaces.iter().filter(|s| s.occupied).count();
    OccupancyReport {
        total_spaces: n_spaces,
        occupied_count,
        utilization: if n_spaces == 0 { 0.0 } else { occupied_count as f64 / n_spaces as f64 },
        spaces,
        threshold,
    }
}

/// Mask-based occupancy. Empty vehicle masks cover nothing.
pub fn assess_occupancy(spaces: &[RleMask], vehicles: &[RleMask], threshold: f64) -> Result<OccupancyReport> {
    check_threshold(threshold)?;
    let coverage = vehicles
        .iter()
        .map(|v| {
            let area = v.area();
            spaces
                .iter()
                .map(|s| {
                    let inter = v.intersection_area(s)?;
                    Ok(if area == 0 { 0.0 } else { inter as f64 / area as f64 })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assign(spaces.len(), &coverage, threshold))
}

/// The same rule with box intersections in place of mask intersections.
pub fn occupancy_from_bboxes(spaces: &[BBox], vehicles: &[BBox], threshold: f64) -> Result<OccupancyReport> {
    check_threshold(threshold)?;
    let coverage: Vec<Vec<f64>> = vehicles
        .iter()
        .map(|v| {
            let area = v.area();
            spaces
                .iter()
                .map(|s| if area > 0.0 { v.intersection_area(s) / area } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(assign(spaces.len(), &coverage, threshold))
}

impl OccupancyReport {
    /// Columns `space_id, occupied, coverage`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["space_id", "occupied", "coverage"]).map_err(csv_err)?;
        for s in &self.spaces {
            w.write_record([s.space_id.to_string(), s.occupied.to_string(), format!("{:.6}", s.coverage_fraction)])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

const FREE: [u8; 3] = [0, 255, 0];
const TAKEN: [u8; 3] = [255, 0, 0];

/// Draw each space's mask outline on a copy of `image`: green when free,
/// red when occupied.
pub fn render_overlay(image: &RgbImage, spaces: &[RleMask], report: &OccupancyReport) -> Result<RgbImage> {
    let mut out = image.clone();
    for (mask, sp) in spaces.iter().zip(&report.spaces) {
        if (mask.width(), mask.height()) != (image.width, image.height) {
            return Err(Error::DimensionMismatch(format!(
                "space {} mask is {}x{}, image is {}x{}",
                sp.space_id,
                mask.width(),
                mask.height(),
                image.width,
                image.height
            )));
        }
        let m = rle_decode(mask)?;
        let colour = if sp.occupied { TAKEN } else { FREE };
        let inside = |c: i64, r: i64| {
            c >= 0 && r >= 0 && (c as usize) < m.width() && (r as usize) < m.height() && m.get(c as usize, r as usize)
        };
        for r in 0..m.height() {
            for c in 0..m.width() {
                let (ci, ri) = (c as i64, r as i64);
                if inside(ci, ri) && !(inside(ci - 1, ri) && inside(ci + 1, ri) && inside(ci, ri - 1) && inside(ci, ri + 1)) {
                    out.put(c, r, colour);
                }
            }
        }
    }
    Ok(out)
}
