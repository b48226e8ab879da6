use serde_json::Value;

use super::{AnnotatedInstance, Label};
use crate::error::{Error, Result};

/// The parts of a LabelMe document the pipeline uses.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelmeDocument {
    pub image_width: usize,
    pub image_height: usize,
    pub image_path: Option<String>,
    /// Base64 image payload, when the annotator embedded one.
    pub image_data: Option<String>,
    pub instances: Vec<AnnotatedInstance>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn dimension(doc: &Value, key: &str) -> Result<usize> {
    doc.get(key)
        .and_then(Value::as_u64)
        .filter(|&v| v > 0)
        .map(|v| v as usize)
        .ok_or_else(|| schema(format!("missing or invalid {key:?}")))
}

/// Parse a LabelMe JSON file. Only polygon shapes are accepted; points outside
/// the image are clamped to its bounds.
pub fn parse_labelme(json_bytes: &[u8]) -> Result<LabelmeDocument> {
    let doc: Value = serde_json::from_slice(json_bytes).map_err(|e| schema(format!("not valid JSON: {e}")))?;
    let image_width = dimension(&doc, "imageWidth")?;
    let image_height = dimension(&doc, "imageHeight")?;
    let shapes = doc
        .get("shapes")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("missing \"shapes\" array"))?;

    let mut instances = Vec::with_capacity(shapes.len());
    for (i, shape) in shapes.iter().enumerate() {
        let shape_type = shape.get("shape_type").and_then(Value::as_str).unwrap_or("polygon");
        if shape_type != "polygon" {
            return Err(schema(format!(
                "shape {i} is a {shape_type:?}; only polygon annotations are accepted"
            )));
        }
        let label: Label = shape
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(format!("shape {i} has no label")))?
            .parse()?;
        let raw = shape
            .get("points")
            .and_then(Value::as_array)
            .ok_or_else(|| schema(format!("shape {i} has no points")))?;
        let mut polygon = Vec::with_capacity(raw.len());
        let mut clamped = false;
        for p in raw {
            let xy = p
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
                .ok_or_else(|| schema(format!("shape {i} has a malformed point {p}")))?;
            let x = xy.0.clamp(0.0, image_width as f64);
            let y = xy.1.clamp(0.0, image_height as f64);
            clamped |= (x, y) != xy;
            polygon.push((x, y));
        }
        if clamped {
            log::warn!("shape {i}: points outside the {image_width}x{image_height} image were clamped");
        }
        if polygon.len() < 3 {
            return Err(schema(format!("shape {i} has {} points; polygons need 3", polygon.len())));
        }
        instances.push(AnnotatedInstance {
            label,
            polygon,
            instance_id: i as u32,
        });
    }
    Ok(LabelmeDocument {
        image_width,
        image_height,
        image_path: doc.get("imagePath").and_then(Value::as_str).map(str::to_owned),
        image_data: doc
            .get("imageData")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .map(str::to_owned),
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(shapes: &str) -> String {
        format!(r#"{{"version":"5.0.1","flags":{{}},"shapes":[{shapes}],"imagePath":"a.png","imageData":null,"imageHeight":10,"imageWidth":20}}"#)
    }

    #[test]
    fn one_triangle() {
        let d = parse_labelme(doc(r#"{"label":"vehicle","points":[[1,1],[5,1],[1,4]],"group_id":null,"shape_type":"polygon","flags":{}}"#).as_bytes()).unwrap();
        assert_eq!((d.image_width, d.image_height), (20, 10));
        assert_eq!(d.instances.len(), 1);
        assert_eq!(d.instances[0].polygon.len(), 3);
        assert_eq!(d.instances[0].label, Label::Vehicle);
        assert_eq!(d.image_path.as_deref(), Some("a.png"));
        assert_eq!(d.image_data, None);
    }

    #[test]
    fn rectangle_is_rejected() {
        let err = parse_labelme(doc(r#"{"label":"vehicle","points":[[1,1],[5,4]],"shape_type":"rectangle"}"#).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(m) if m.contains("polygon")));
    }

    #[test]
    fn unknown_label_lists_accepted() {
        let err = parse_labelme(doc(r#"{"label":"tree","points":[[1,1],[5,1],[1,4]]}"#).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Label { .. }));
    }

    #[test]
    fn missing_dimensions_are_schema_errors() {
        assert!(matches!(parse_labelme(br#"{"shapes":[]}"#), Err(Error::Schema(_))));
        assert!(matches!(parse_labelme(br#"{"imageWidth":3,"imageHeight":3}"#), Err(Error::Schema(_))));
    }

    #[test]
    fn overshooting_points_are_clamped() {
        let d = parse_labelme(doc(r#"{"label":"Parking Space","points":[[-1,1],[25,1],[1,11]]}"#).as_bytes()).unwrap();
        assert_eq!(d.instances[0].polygon, vec![(0.0, 1.0), (20.0, 1.0), (1.0, 10.0)]);
        assert_eq!(d.instances[0].label, Label::ParkingSpace);
    }

    #[test]
    fn five_shapes_in_file_order() {
        let tri = |label: &str, x: i32| format!(r#"{{"label":"{label}","points":[[{x},1],[{},1],[{x},4]],"shape_type":"polygon"}}"#, x + 2);
        let shapes = [
            tri("parking_space", 0),
            tri("vehicle", 3),
            tri("parking_space", 6),
            tri("vehicle", 9),
            tri("vehicle", 12),
        ]
        .join(",");
        let d = parse_labelme(doc(&shapes).as_bytes()).unwrap();
        let labels: Vec<_> = d.instances.iter().map(|i| i.label).collect();
        use Label::*;
        assert_eq!(labels, vec![ParkingSpace, Vehicle, ParkingSpace, Vehicle, Vehicle]);
        assert_eq!(d.instances.iter().map(|i| i.instance_id).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(d.instances[1].polygon[0], (3.0, 1.0));
    }
}
