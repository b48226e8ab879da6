//! JSON-lines detection records:
//! `{"image_id", "label", "score", "bbox": [x_min, y_min, x_max, y_max], "rle"?: {size, counts}}`.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::Scored;
use crate::annotation::{BBox, Label, RleMask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(deserialize_with = "id_from_text_or_number")]
    pub image_id: String,
    pub label: Label,
    pub score: f64,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rle: Option<RleMask>,
}

impl Scored for Detection {
    fn score(&self) -> f64 {
        self.score
    }

    fn bbox(&self) -> BBox {
        self.bbox
    }
}

fn id_from_text_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Int(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::Text(s) => s,
        Id::Int(i) => i.to_string(),
    })
}

impl Detection {
    fn check(&self) -> std::result::Result<(), String> {
        if !self.score.is_finite() {
            return Err(format!("score {} is not finite", self.score));
        }
        let b = <[f64; 4]>::from(self.bbox);
        if b.iter().any(|v| !v.is_finite()) || !self.bbox.is_valid() {
            return Err(format!("bbox {b:?} is not a valid [x_min, y_min, x_max, y_max]"));
        }
        Ok(())
    }
}

/// Parse JSON-lines text; blank lines are skipped and errors carry 1-based line numbers.
pub fn read_detections(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let det: Detection =
            serde_json::from_str(line).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1)))?;
        det.check().map_err(|m| Error::Schema(format!("line {}: {m}", i + 1)))?;
        out.push(det);
    }
    Ok(out)
}

pub fn read_detections_file(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    read_detections(&text).map_err(|e| e.in_file(path))
}

pub fn write_detections(dets: &[Detection]) -> Result<String> {
    let mut s = String::new();
    for d in dets {
        s.push_str(&serde_json::to_string(d)?);
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_and_without_mask() {
        let dets = vec![
            Detection {
                image_id: "lot_1".into(),
                label: Label::Vehicle,
                score: 0.75,
                bbox: BBox::new(1.0, 2.0, 3.0, 4.0),
                rle: None,
            },
            Detection {
                image_id: "lot_1".into(),
                label: Label::ParkingSpace,
                score: 0.5,
                bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
                rle: Some(RleMask::new(2, 2, vec![0, 1, 3]).unwrap()),
            },
        ];
        let text = write_detections(&dets).unwrap();
        assert!(!text.lines().next().unwrap().contains("rle"));
        assert_eq!(read_detections(&text).unwrap(), dets);
    }

    #[test]
    fn numeric_ids_become_text() {
        let d = read_detections(r#"{"image_id":7,"label":"vehicle","score":1,"bbox":[0,0,1,1]}"#).unwrap();
        assert_eq!(d[0].image_id, "7");
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\"image_id\":\"a\",\"label\":\"vehicle\",\"score\":1,\"bbox\":[0,0,1,1]}\n\n{\"image_id\":\"a\",\"label\":\"car\",\"score\":1,\"bbox\":[0,0,1,1]}\n";
        let msg = read_detections(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        let inverted = r#"{"image_id":"a","label":"vehicle","score":1,"bbox":[2,0,1,1]}"#;
        assert!(read_detections(inverted).unwrap_err().to_string().contains("line 1"));
    }
}
