use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crop_parcel;
use crate::error::{Error, Result};
use crate::raster_io::{mosaic, read_geotiff, write_png, GeoRaster};
use crate::vector_io::{filter_features, read_shapefile, ParcelFeature, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractOptions {
    pub background: [u8; 3],
    /// CRS code of the parcel layers (0 = unknown).
    pub parcel_crs: u32,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub col0: i64,
    pub row0: i64,
    pub w: usize,
    pub h: usize,
}

/// One manifest row per selected parcel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub shapefile_index: usize,
    pub record_index: usize,
    /// Input rasters overlapping the crop window.
    pub raster_indices: Vec<usize>,
    /// Crop window in mosaic pixels; absent when the crop failed.
    pub window: Option<Window>,
    /// Parcel polygon bounds `[min_x, min_y, max_x, max_y]`.
    pub world_bbox: [f64; 4],
    /// PNG path relative to the output directory.
    pub png_path: Option<String>,
    /// `"ok"` or `"error: <reason>"`.
    pub status: String,
}

impl ManifestEntry {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub type Manifest = Vec<ManifestEntry>;

pub const MANIFEST_FILE: &str = "manifest.json";

fn png_name(shapefile_index: usize, record_index: usize) -> String {
    if shapefile_index == 0 {
        format!("parcel_{record_index:06}.png")
    } else {
        format!("parcel_{shapefile_index}_{record_index:06}.png")
    }
}

fn overlapping(rasters: &[GeoRaster], bounds: [f64; 4]) -> Vec<usize> {
    rasters
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let b = r.world_bounds();
            b[0] < bounds[2] && bounds[0] < b[2] && b[1] < bounds[3] && bounds[1] < b[3]
        })
        .map(|(i, _)| i)
        .collect()
}

fn crop_one(
    stitched: &GeoRaster,
    inputs: &[GeoRaster],
    shapefile_index: usize,
    feature: &ParcelFeature,
    out_dir: &Path,
    opts: &ExtractOptions,
) -> ManifestEntry {
    let mut entry = ManifestEntry {
        shapefile_index,
        record_index: feature.record_index,
        raster_indices: Vec::new(),
        window: None,
        world_bbox: feature.geometry.bbox(),
        png_path: None,
        status: "ok".into(),
    };
    let result = crop_parcel(stitched, feature, opts.background, opts.parcel_crs).and_then(|(crop, _mask)| {
        let t = stitched.transform();
        let (col0, row0) = t.world_to_pixel(crop.transform().origin_x, crop.transform().origin_y);
        entry.window = Some(Window {
            col0: col0.round() as i64,
            row0: row0.round() as i64,
            w: crop.width(),
            h: crop.height(),
        });
        entry.raster_indices = overlapping(inputs, crop.world_bounds());
        let name = png_name(shapefile_index, feature.record_index);
        write_png(&crop, out_dir.join(&name))?;
        entry.png_path = Some(name);
        Ok(())
    });
    if let Err(e) = result {
        log::warn!("parcel {shapefile_index}/{}: {e}", feature.record_index);
        entry.window = None;
        entry.png_path = None;
        entry.status = format!("error: {e}");
    }
    entry
}

/// Stitch `raster_paths`, select parcels from `shapefile_paths` (all of them
/// when `predicate` is `None`), crop each and write it as a PNG in `out_dir`.
///
/// Per-parcel failures are recorded in the manifest; only unreadable inputs
/// abort the run. The manifest is also written to `out_dir/manifest.json`,
/// sorted by (shapefile, record).
pub fn extract_all(
    raster_paths: &[PathBuf],
    shapefile_paths: &[PathBuf],
    predicate: Option<&Predicate>,
    out_dir: &Path,
    opts: &ExtractOptions,
) -> Result<Manifest> {
    let inputs = raster_paths.iter().map(read_geotiff).collect::<Result<Vec<_>>>()?;
    let stitched = mosaic(&inputs)?;

    let mut selected = Vec::new();
    for (i, path) in shapefile_paths.iter().enumerate() {
        let features = read_shapefile(path)?;
        let features = match predicate {
            Some(p) => filter_features(&features, p).map_err(|e| e.in_file(path))?,
            None => features,
        };
        log::info!("{}: {} parcel(s) selected", path.display(), features.len());
        selected.extend(features.into_iter().map(|f| (i, f)));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).in_file(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut manifest: Manifest = pool.install(|| {
        selected
            .par_iter()
            .map(|(i, f)| crop_one(&stitched, &inputs, *i, f, out_dir, opts))
            .collect()
    });
    manifest.sort_by_key(|e| (e.shapefile_index, e.record_index));

    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::from(e).in_file(&path))?;
    Ok(manifest)
}
