//! ESRI shapefile (Polygon) and dBASE III attribute handling for parcel layers.

mod dbf;
mod predicate;
mod shp;

pub use dbf::{DbfField, DbfTable};
pub use predicate::{filter_features, CompareOp, Predicate};
pub use shp::{
    encode_shapefile, parse_shapefile, read_shapefile, write_subset_shapefile, ShapefileBytes, ShapefilePaths,
};

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// World-space vertex `(x, y)`.
pub type Point = (f64, f64);

/// One or more closed rings. Outer rings run clockwise, holes counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonGeom {
    rings: Vec<Vec<Point>>,
}

impl PolygonGeom {
    /// Validates ring closure and length, closing open rings and re-orienting
    /// rings that violate the outer-clockwise / hole-counter-clockwise rule.
    pub fn new(rings: Vec<Vec<Point>>) -> Result<Self> {
        let mut rings = rings;
        for (i, ring) in rings.iter_mut().enumerate() {
            if ring.len() >= 3 && ring.first() != ring.last() {
                log::warn!("ring {i} is not closed; closing it");
                ring.push(ring[0]);
            }
            if ring.len() < 4 {
                return Err(Error::Format(format!("ring {i} has {} points, need at least 4", ring.len())));
            }
            if ring.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                return Err(Error::Format(format!("ring {i} has a non-finite coordinate")));
            }
        }
        let holes: Vec<bool> = (0..rings.len())
            .map(|i| {
                let probe = rings[i][0];
                let depth = rings
                    .iter()
                    .enumerate()
                    .filter(|&(j, other)| j != i && point_in_ring(probe, other))
                    .count();
                depth % 2 == 1
            })
            .collect();
        for (i, (ring, hole)) in rings.iter_mut().zip(holes).enumerate() {
            let area = signed_area(ring);
            let wrong = if hole { area < 0.0 } else { area > 0.0 };
            if wrong {
                log::warn!(
                    "ring {i} ({}) has the wrong orientation; reversing it",
                    if hole { "hole" } else { "outer" }
                );
                ring.reverse();
            }
        }
        Ok(Self { rings })
    }

    /// Clockwise axis-aligned rectangle.
    pub fn rectangle(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            rings: vec![vec![
                (min_x, min_y),
                (min_x, max_y),
                (max_x, max_y),
                (max_x, min_y),
                (min_x, min_y),
            ]],
        }
    }

    pub fn rings(&self) -> &[Vec<Point>] {
        &self.rings
    }

    /// `[min_x, min_y, max_x, max_y]` over all vertices.
    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for &(x, y) in self.rings.iter().flatten() {
            b[0] = b[0].min(x);
            b[1] = b[1].min(y);
            b[2] = b[2].max(x);
            b[3] = b[3].max(y);
        }
        b
    }

    pub fn point_count(&self) -> usize {
        self.rings.iter().map(Vec::len).sum()
    }
}

/// Shoelace area, positive for counter-clockwise rings (y up).
pub fn signed_area(ring: &[Point]) -> f64 {
    ring.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum::<f64>() / 2.0
}

fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            inside = !inside;
        }
    }
    inside
}

/// Polygon area with holes subtracted.
pub fn polygon_area(g: &PolygonGeom) -> f64 {
    // outer rings are clockwise (negative shoelace), holes positive
    (-g.rings.iter().map(|r| signed_area(r)).sum::<f64>()).abs()
}

/// A dBASE attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
    Null,
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Number(n) => Some(*n),
            AttrValue::Text(s) => s.trim().parse().ok(),
            AttrValue::Null => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(n) => write!(f, "{n}"),
            AttrValue::Text(s) => f.write_str(s),
            AttrValue::Null => Ok(()),
        }
    }
}

/// A parcel polygon plus its attribute row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcelFeature {
    pub geometry: PolygonGeom,
    pub attributes: IndexMap<String, AttrValue>,
    /// Zero-based record number in the source shapefile.
    pub record_index: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_ccw(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        vec![(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0)]
    }

    #[test]
    fn unit_square_area() {
        assert_eq!(polygon_area(&PolygonGeom::rectangle(0.0, 0.0, 1.0, 1.0)), 1.0);
    }

    #[test]
    fn collinear_ring_has_zero_area() {
        let g = PolygonGeom::new(vec![vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 0.0)]]).unwrap();
        assert_eq!(polygon_area(&g), 0.0);
    }

    #[test]
    fn hole_area_matches_raster_count() {
        // both rings given counter-clockwise; construction fixes the outer one
        let g = PolygonGeom::new(vec![square_ccw(0.0, 0.0, 1.0), square_ccw(0.25, 0.25, 0.5)]).unwrap();
        assert!(signed_area(&g.rings()[0]) < 0.0);
        assert!(signed_area(&g.rings()[1]) > 0.0);

        // oracle: 1/1000 grid, count cell centres inside the outer ring and outside the hole
        let n = 1000;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                if point_in_ring(p, &g.rings()[0]) && !point_in_ring(p, &g.rings()[1]) {
                    count += 1;
                }
            }
        }
        let oracle = count as f64 / (n * n) as f64;
        assert!((oracle - 0.75).abs() < 1e-3);
        assert!((polygon_area(&g) - oracle).abs() < 1e-3);
        assert_eq!(polygon_area(&g), 0.75);
    }

    #[test]
    fn open_ring_is_closed() {
        let g = PolygonGeom::new(vec![vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]]).unwrap();
        assert_eq!(g.rings()[0].len(), 4);
        assert_eq!(g.rings()[0][0], g.rings()[0][3]);
    }

    #[test]
    fn short_ring_is_rejected() {
        assert!(PolygonGeom::new(vec![vec![(0.0, 0.0), (1.0, 0.0)]]).is_err());
    }
}
