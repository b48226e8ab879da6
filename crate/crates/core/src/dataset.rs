//! Annotated image datasets on disk.
//!
//! ```text
//! <root>/index.json              {"images": [{name, image, masks, width, height, instances}]}
//! <root>/images/<name>.png
//! <root>/masks/<name>.rle.json   [{instance_id, label, bbox, rle: {size, counts}}]
//! ```

use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::annotation::{parse_labelme, polygon_to_bbox, polygon_to_mask, rle_encode, BBox, Label, LabelmeDocument, RleMask};
use crate::error::{Error, Result};
use crate::raster_io::{decode_png, read_png, write_rgb_png, RgbImage};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub instance_id: u32,
    pub label: Label,
    pub bbox: BBox,
    pub rle: RleMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnnotations {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetImage {
    pub annotations: ImageAnnotations,
    pub image: RgbImage,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<DatasetImage>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    name: String,
    image: String,
    masks: String,
    width: usize,
    height: usize,
    instances: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    images: Vec<IndexEntry>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Schema(e.to_string()).in_file(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

fn read_index(root: &Path) -> Result<Index> {
    read_json(&root.join(INDEX_FILE))
}

fn read_masks(root: &Path, entry: &IndexEntry) -> Result<ImageAnnotations> {
    let path = root.join(&entry.masks);
    let instances: Vec<Instance> = read_json(&path)?;
    for inst in &instances {
        if (inst.rle.width(), inst.rle.height()) != (entry.width, entry.height) {
            return Err(Error::DimensionMismatch(format!(
                "instance {} mask is {}x{}, image is {}x{}",
                inst.instance_id,
                inst.rle.width(),
                inst.rle.height(),
                entry.width,
                entry.height
            ))
            .in_file(path));
        }
    }
    Ok(ImageAnnotations {
        name: entry.name.clone(),
        width: entry.width,
        height: entry.height,
        instances,
    })
}

/// Annotations only, without decoding images.
pub fn load_annotations(root: impl AsRef<Path>) -> Result<Vec<ImageAnnotations>> {
    let root = root.as_ref();
    read_index(root)?.images.iter().map(|e| read_masks(root, e)).collect()
}

pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let index = read_index(root)?;
    let mut images = Vec::with_capacity(index.images.len());
    for entry in &index.images {
        let annotations = read_masks(root, entry)?;
        let image = read_png(root.join(&entry.image))?;
        if (image.width, image.height) != (entry.width, entry.height) {
            return Err(Error::DimensionMismatch(format!(
                "image {} is {}x{}, index says {}x{}",
                entry.name, image.width, image.height, entry.width, entry.height
            )));
        }
        images.push(DatasetImage { annotations, image });
    }
    Ok(Dataset { images })
}

pub fn save_dataset(ds: &Dataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    for dir in ["images", "masks"] {
        let p = root.join(dir);
        std::fs::create_dir_all(&p).map_err(|e| Error::from(e).in_file(&p))?;
    }
    let mut index = Index::default();
    for img in &ds.images {
        let a = &img.annotations;
        let entry = IndexEntry {
            name: a.name.clone(),
            image: format!("images/{}.png", a.name),
            masks: format!("masks/{}.rle.json", a.name),
            width: a.width,
            height: a.height,
            instances: a.instances.len(),
        };
        write_rgb_png(&img.image, root.join(&entry.image))?;
        write_file(&root.join(&entry.masks), &serde_json::to_vec(&a.instances)?)?;
        index.images.push(entry);
    }
    write_file(&root.join(INDEX_FILE), &serde_json::to_vec_pretty(&index)?)
}

/// Build a dataset image from a parsed LabelMe document: boxes come from the
/// polygons, masks from rasterizing them.
pub fn from_labelme(name: &str, doc: &LabelmeDocument, image: RgbImage) -> Result<DatasetImage> {
    if (image.width, image.height) != (doc.image_width, doc.image_height) {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{}, annotation says {}x{}",
            image.width, image.height, doc.image_width, doc.image_height
        )));
    }
    let instances = doc
        .instances
        .iter()
        .map(|inst| Instance {
            instance_id: inst.instance_id,
            label: inst.label,
            bbox: polygon_to_bbox(&inst.polygon),
            rle: rle_encode(&polygon_to_mask(&inst.polygon, doc.image_width, doc.image_height)),
        })
        .collect();
    Ok(DatasetImage {
        annotations: ImageAnnotations {
            name: name.to_owned(),
            width: doc.image_width,
            height: doc.image_height,
            instances,
        },
        image,
    })
}

/// Load a LabelMe JSON file and its image (from `imagePath`, falling back to
/// embedded `imageData`). The dataset name is the JSON file stem.
pub fn import_labelme(json_path: impl AsRef<Path>) -> Result<DatasetImage> {
    let json_path = json_path.as_ref();
    let bytes = std::fs::read(json_path).map_err(|e| Error::from(e).in_file(json_path))?;
    let doc = parse_labelme(&bytes).map_err(|e| e.in_file(json_path))?;
    let name = json_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Schema("annotation file has no usable name".into()).in_file(json_path))?;

    let sibling: Option<PathBuf> = doc
        .image_path
        .as_ref()
        .map(|p| json_path.parent().unwrap_or(Path::new(".")).join(p))
        .filter(|p| p.is_file());
    let image = match (sibling, &doc.image_data) {
        (Some(p), _) => read_png(p)?,
        (None, Some(data)) => {
            let raw = base64::engine::general_purpose::STANDARD
                .decode(data.trim())
                .map_err(|e| Error::Schema(format!("imageData is not base64: {e}")).in_file(json_path))?;
            decode_png(&raw).map_err(|e| e.in_file(json_path))?
        }
        (None, None) => {
            return Err(Error::Schema("image not found via imagePath and no imageData embedded".into()).in_file(json_path))
        }
    };
    from_labelme(name, &doc, image).map_err(|e| e.in_file(json_path))
}
