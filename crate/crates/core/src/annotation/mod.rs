//! Polygon annotations: LabelMe ingestion, boxes, masks and RLE.

mod labelme;
mod rle;

pub use labelme::{parse_labelme, LabelmeDocument};
pub use rle::{mask_area, rle_decode, rle_encode, RleMask};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parcel_extract::{scanline, BitMask};

/// The two object classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Label {
    ParkingSpace,
    Vehicle,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::ParkingSpace, Label::Vehicle];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::ParkingSpace => "parking_space",
            Label::Vehicle => "vehicle",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    /// Case-folds and maps spaces to underscores before matching.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace(' ', "_");
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == norm)
            .ok_or_else(|| Error::Label {
                label: s.to_owned(),
                accepted: Label::ALL.iter().map(|l| l.as_str()).collect(),
            })
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Label> for String {
    fn from(l: Label) -> Self {
        l.as_str().to_owned()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Axis-aligned box in pixels, serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    /// From integer pixel bounds `[min_col, min_row, max_col + 1, max_row + 1]`.
    pub fn from_pixel_bounds(b: [usize; 4]) -> Self {
        Self::new(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64)
    }

    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y_max - self.y_min).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_valid(&self) -> bool {
        self.x_max >= self.x_min && self.y_max >= self.y_min
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// A labelled polygon in image pixels (x right, y down).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedInstance {
    pub label: Label,
    pub polygon: Vec<(f64, f64)>,
    pub instance_id: u32,
}

/// Tight box around the polygon's vertices.
pub fn polygon_to_bbox(polygon: &[(f64, f64)]) -> BBox {
    let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in polygon {
        b.x_min = b.x_min.min(x);
        b.y_min = b.y_min.min(y);
        b.x_max = b.x_max.max(x);
        b.y_max = b.y_max.max(y);
    }
    b
}

/// Pixels of a `w x h` image whose centres fall inside the polygon (even-odd rule).
pub fn polygon_to_mask(polygon: &[(f64, f64)], w: usize, h: usize) -> BitMask {
    let mut ring = polygon.to_vec();
    if ring.len() >= 2 && ring.first() != ring.last() {
        ring.push(ring[0]);
    }
    scanline::fill_rings(&[ring], 0, 0, w, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_bbox() {
        assert_eq!(polygon_to_bbox(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]), BBox::new(0.0, 0.0, 4.0, 3.0));
    }

    #[test]
    fn square_bbox_is_fixed_point() {
        let sq = [(1.0, 2.0), (5.0, 2.0), (5.0, 6.0), (1.0, 6.0)];
        assert_eq!(polygon_to_bbox(&sq), BBox::new(1.0, 2.0, 5.0, 6.0));
    }

    #[test]
    fn repeated_point_bbox_is_degenerate() {
        let b = polygon_to_bbox(&[(2.5, 3.5); 3]);
        assert_eq!(b, BBox::new(2.5, 3.5, 2.5, 3.5));
        assert_eq!(b.area(), 0.0);
    }

    #[test]
    fn masks_of_simple_polygons() {
        let full = [(0.0, 0.0), (6.0, 0.0), (6.0, 4.0), (0.0, 4.0)];
        assert_eq!(polygon_to_mask(&full, 6, 4).count_ones(), 24);
        let two = [(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)];
        let m = polygon_to_mask(&two, 6, 4);
        assert_eq!(m.count_ones(), 4);
        assert!(m.get(1, 1) && m.get(2, 2));
        let outside = [(10.0, 10.0), (12.0, 10.0), (12.0, 12.0)];
        assert_eq!(polygon_to_mask(&outside, 6, 4).count_ones(), 0);
    }

    #[test]
    fn label_normalization() {
        assert_eq!("Parking Space".parse::<Label>().unwrap(), Label::ParkingSpace);
        assert_eq!(" VEHICLE ".parse::<Label>().unwrap(), Label::Vehicle);
        match "tree".parse::<Label>() {
            Err(Error::Label { accepted, .. }) => assert_eq!(accepted, vec!["parking_space", "vehicle"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bbox_json_is_an_array() {
        let b = BBox::new(1.0, 2.0, 3.5, 4.0);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1.0,2.0,3.5,4.0]");
    }
}
