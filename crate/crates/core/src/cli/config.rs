//! TOML run configuration. Every key is optional; command-line flags win over
//! the file, and relative paths are resolved against the file's directory.
//!
//! ```toml
//! out = "run1"
//! seed = 7
//! jobs = 4
//!
//! [extract]
//! rasters = ["tiles/a.tif", "tiles/b.tif"]
//! shapefiles = ["parcels.shp"]
//! predicate = "LOT == yes"
//!
//! [augment]
//! dataset = "dataset"
//! per_image_outputs = 2
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::IouKind;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub stitch: StitchSection,
    pub extract: ExtractSection,
    pub annotations: AnnotationsSection,
    pub augment: AugmentSection,
    pub anchors: AnchorsSection,
    pub nms: NmsSection,
    pub evaluate: EvaluateSection,
    pub occupancy: OccupancySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StitchSection {
    pub rasters: Vec<PathBuf>,
    pub deflate: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub rasters: Vec<PathBuf>,
    pub shapefiles: Vec<PathBuf>,
    pub predicate: Option<String>,
    pub background: Option<[u8; 3]>,
    pub parcel_crs: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationsSection {
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub dataset: Option<PathBuf>,
    pub rotation_range_deg: Option<[f64; 2]>,
    pub vertical_flip: Option<bool>,
    pub per_image_outputs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorsSection {
    pub scales: Option<Vec<f64>>,
    pub aspect_ratios: Option<Vec<f64>>,
    pub stride: Option<f64>,
    pub fm_width: Option<usize>,
    pub fm_height: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmsSection {
    pub detections: Option<PathBuf>,
    pub iou_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub ground_truth: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub iou_kinds: Option<Vec<IouKind>>,
    pub iou_thresholds: Option<Vec<f64>>,
    pub max_dets_per_image: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancySection {
    pub detections: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub min_score: Option<f64>,
    pub use_bboxes: Option<bool>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut cfg = Self::parse(&text).map_err(|e| e.in_file(path))?;
        cfg.rebase(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    /// Make relative paths relative to `base`.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                fix(p)
            }
        };
        fix_opt(&mut self.out);
        self.stitch.rasters.iter_mut().for_each(fix);
        self.extract.rasters.iter_mut().for_each(fix);
        self.extract.shapefiles.iter_mut().for_each(fix);
        self.annotations.inputs.iter_mut().for_each(fix);
        fix_opt(&mut self.augment.dataset);
        fix_opt(&mut self.nms.detections);
        fix_opt(&mut self.evaluate.ground_truth);
        fix_opt(&mut self.evaluate.detections);
        fix_opt(&mut self.occupancy.detections);
        fix_opt(&mut self.occupancy.images);
    }
}

/// Fail early, naming the first input that does not exist.
pub fn require_existing<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::Config(format!("input {} does not exist", p.display())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_rebasing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 3\n[extract]\nrasters = [\"a.tif\", \"/abs/b.tif\"]\npredicate = \"APN == 002\"\n[evaluate]\niou_kinds = [\"mask\"]\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.extract.rasters, vec![dir.path().join("a.tif"), PathBuf::from("/abs/b.tif")]);
        assert_eq!(cfg.evaluate.iou_kinds, Some(vec![IouKind::Mask]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::parse("[augment]\nrotation = 3\n").is_err());
    }
}
