//! The `parcelsight` command line: one subcommand per pipeline stage.
//!
//! Data goes to files under `--out`; logs go to stderr. Exit status is 0 on
//! success, 1 when some items failed but the run completed, 2 on fatal errors.

mod config;

pub use config::PipelineConfig;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::Serialize;

use crate::annotation::{rle_encode, BBox, Label, RleMask};
use crate::augment::{expand_dataset, plan_variant, AugmentConfig};
use crate::dataset::{import_labelme, load_annotations, load_dataset, save_dataset, Dataset};
use crate::detection_geom::{generate_anchors, nms_indices, read_detections_file, write_detections, AnchorConfig, Detection};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, format_table, EvalConfig, EvalSummary, IouKind};
use crate::occupancy::{assess_occupancy, occupancy_from_bboxes, render_overlay, OccupancyReport, DEFAULT_THRESHOLD};
use crate::parcel_extract::{extract_all, BitMask, ExtractOptions};
use crate::raster_io::{mosaic, read_geotiff, read_png, write_geotiff, write_rgb_png, TiffCompression, TiffWriteOptions};
use crate::vector_io::Predicate;
use config::require_existing;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "parcelsight", version, about = "Parcel imagery, annotation, detection-geometry and occupancy pipeline")]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized stages
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output (-v info, -vv debug); RUST_LOG overrides
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mosaic GeoTIFFs into mosaic.tif
    Stitch(StitchArgs),
    /// Crop selected parcels to PNGs and write manifest.json
    Extract(ExtractArgs),
    /// Build a dataset from LabelMe JSON files
    Annotations(AnnotationsArgs),
    /// Add rotated/flipped variants to a dataset
    Augment(AugmentArgs),
    /// Dump the anchor grid for a feature map to anchors.json
    Anchors(AnchorsArgs),
    /// Per-image, per-class NMS over a detections file
    Nms(NmsArgs),
    /// COCO-style AP of detections against a dataset
    Evaluate(EvaluateArgs),
    /// Parking-space occupancy from detections
    Occupancy(OccupancyArgs),
}

#[derive(Debug, Args)]
pub struct StitchArgs {
    pub rasters: Vec<PathBuf>,
    /// Deflate-compress the output
    #[arg(long)]
    pub deflate: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long = "raster")]
    pub rasters: Vec<PathBuf>,
    #[arg(long = "shapefile")]
    pub shapefiles: Vec<PathBuf>,
    /// Attribute filter, e.g. "APN == 002" or "AREA > 500"
    #[arg(long = "where")]
    pub predicate: Option<String>,
    /// Fill outside the parcel as R,G,B
    #[arg(long, value_parser = parse_rgb)]
    pub background: Option<[u8; 3]>,
    /// CRS code of the parcel layers (0 = unknown)
    #[arg(long)]
    pub parcel_crs: Option<u32>,
}

#[derive(Debug, Args)]
pub struct AnnotationsArgs {
    /// LabelMe JSON files or directories containing them
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Dataset directory (with index.json)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub per_image_outputs: Option<usize>,
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["MIN", "MAX"])]
    pub rotation_range: Option<Vec<f64>>,
    #[arg(long)]
    pub no_flip: bool,
}

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    #[arg(long)]
    pub fm_width: Option<usize>,
    #[arg(long)]
    pub fm_height: Option<usize>,
    #[arg(long)]
    pub stride: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub aspect_ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth dataset directory
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// bbox, mask, or both (default: mask too when every detection has one)
    #[arg(long, value_delimiter = ',')]
    pub iou_kind: Option<Vec<String>>,
    #[arg(long)]
    pub max_dets: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OccupancyArgs {
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Directory with <image_id>.png (or images/<image_id>.png) for overlays
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Ignore detections scoring below this
    #[arg(long)]
    pub min_score: Option<f64>,
    /// Use boxes even when masks are present
    #[arg(long)]
    pub bboxes: bool,
}

fn parse_rgb(s: &str) -> std::result::Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [r, g, b] => Ok([
            r.parse().map_err(|e| format!("{e}"))?,
            g.parse().map_err(|e| format!("{e}"))?,
            b.parse().map_err(|e| format!("{e}"))?,
        ]),
        _ => Err(format!("expected R,G,B, got {s:?}")),
    }
}

/// Settings shared by every subcommand after merging flags over the config file.
struct Ctx {
    cfg: PipelineConfig,
    out: PathBuf,
    seed: u64,
}

impl Ctx {
    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_file(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::from(e).in_file(parent))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::from(e).in_file(&path))?;
        Ok(path)
    }
}

fn required(value: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    value.ok_or_else(|| Error::Config(format!("no {what} given (flag or config file)")))
}

fn non_empty(list: Vec<PathBuf>, fallback: &[PathBuf], what: &str) -> Result<Vec<PathBuf>> {
    let v = if list.is_empty() { fallback.to_vec() } else { list };
    if v.is_empty() {
        return Err(Error::Config(format!("no {what} given (flag or config file)")));
    }
    require_existing(&v)?;
    Ok(v)
}

/// Exit status of a completed command.
type Status = i32;

fn cmd_stitch(ctx: &Ctx, a: StitchArgs) -> Result<Status> {
    let paths = non_empty(a.rasters, &ctx.cfg.stitch.rasters, "rasters")?;
    let rasters = paths.iter().map(read_geotiff).collect::<Result<Vec<_>>>()?;
    let m = mosaic(&rasters)?;
    let opts = TiffWriteOptions {
        compression: if a.deflate || ctx.cfg.stitch.deflate == Some(true) {
            TiffCompression::Deflate
        } else {
            TiffCompression::None
        },
        ..Default::default()
    };
    let path = ctx.write("mosaic.tif", &write_geotiff(&m, &opts)?)?;
    let b = m.world_bounds();
    log::info!(
        "{} raster(s) -> {}x{} px, extent [{}, {}, {}, {}], crs {} -> {}",
        rasters.len(),
        m.width(),
        m.height(),
        b[0],
        b[1],
        b[2],
        b[3],
        m.transform().crs_code,
        path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_extract(ctx: &Ctx, jobs: usize, a: ExtractArgs) -> Result<Status> {
    let sec = &ctx.cfg.extract;
    let rasters = non_empty(a.rasters, &sec.rasters, "rasters")?;
    let shapefiles = non_empty(a.shapefiles, &sec.shapefiles, "shapefiles")?;
    let predicate: Option<Predicate> = a.predicate.or_else(|| sec.predicate.clone()).map(|p| p.parse()).transpose()?;
    let opts = ExtractOptions {
        background: a.background.or(sec.background).unwrap_or([0, 0, 0]),
        parcel_crs: a.parcel_crs.or(sec.parcel_crs).unwrap_or(0),
        jobs,
    };
    let manifest = extract_all(&rasters, &shapefiles, predicate.as_ref(), &ctx.out, &opts)?;
    let failed = manifest.iter().filter(|e| !e.is_ok()).count();
    log::info!("{} parcel(s) cropped, {failed} failed", manifest.len() - failed);
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn labelme_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::from(e).in_file(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_annotations(ctx: &Ctx, a: AnnotationsArgs) -> Result<Status> {
    let inputs = non_empty(a.inputs, &ctx.cfg.annotations.inputs, "annotation inputs")?;
    let mut ds = Dataset::default();
    let mut failed = 0;
    for f in labelme_files(&inputs)? {
        match import_labelme(&f) {
            Ok(img) => ds.images.push(img),
            Err(e) => {
                log::error!("{e}");
                failed += 1;
            }
        }
    }
    save_dataset(&ds, &ctx.out)?;
    log::info!("{} image(s) imported, {failed} failed", ds.images.len());
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_augment(ctx: &Ctx, a: AugmentArgs) -> Result<Status> {
    let sec = &ctx.cfg.augment;
    let root = required(a.dataset.or_else(|| sec.dataset.clone()), "dataset")?;
    require_existing([&root])?;
    let defaults = AugmentConfig::default();
    let cfg = AugmentConfig {
        rotation_range_deg: a
            .rotation_range
            .map(|v| [v[0], v[1]])
            .or(sec.rotation_range_deg)
            .unwrap_or(defaults.rotation_range_deg),
        vertical_flip: !a.no_flip && sec.vertical_flip.unwrap_or(defaults.vertical_flip),
        per_image_outputs: a.per_image_outputs.or(sec.per_image_outputs).unwrap_or(defaults.per_image_outputs),
        seed: ctx.seed,
    };
    cfg.validate()?;
    let ds = load_dataset(&root)?;
    let expanded = expand_dataset(&ds, &cfg)?;
    save_dataset(&expanded, &ctx.out)?;
    let plans: Vec<_> = (0..ds.images.len())
        .flat_map(|i| (0..cfg.per_image_outputs).map(move |k| (i, k)))
        .map(|(i, k)| plan_variant(&cfg, i, k))
        .collect();
    ctx.write("augment_plan.json", &serde_json::to_vec_pretty(&serde_json::json!({ "config": cfg, "variants": plans }))?)?;
    log::info!("{} image(s) -> {}", ds.images.len(), expanded.images.len());
    Ok(EXIT_OK)
}

fn cmd_anchors(ctx: &Ctx, a: AnchorsArgs) -> Result<Status> {
    let sec = &ctx.cfg.anchors;
    let d = AnchorConfig::default();
    let cfg = AnchorConfig {
        scales: a.scales.or_else(|| sec.scales.clone()).unwrap_or(d.scales),
        aspect_ratios: a.aspect_ratios.or_else(|| sec.aspect_ratios.clone()).unwrap_or(d.aspect_ratios),
        stride: a.stride.or(sec.stride).unwrap_or(d.stride),
    };
    cfg.validate()?;
    let w = a.fm_width.or(sec.fm_width).unwrap_or(1);
    let h = a.fm_height.or(sec.fm_height).unwrap_or(1);
    let anchors = generate_anchors(&cfg, w, h);
    let doc = serde_json::json!({
        "config": cfg,
        "fm_width": w,
        "fm_height": h,
        "anchors_per_location": cfg.anchors_per_location(),
        "anchors": anchors,
    });
    ctx.write("anchors.json", &serde_json::to_vec_pretty(&doc)?)?;
    log::info!("{} anchors ({} per location) on a {w}x{h} map", anchors.len(), cfg.anchors_per_location());
    Ok(EXIT_OK)
}

/// Group positions by `(image_id, label)` in order of first appearance.
fn group_detections(dets: &[Detection]) -> IndexMap<(String, Label), Vec<usize>> {
    let mut groups: IndexMap<(String, Label), Vec<usize>> = IndexMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry((d.image_id.clone(), d.label)).or_default().push(i);
    }
    groups
}

fn cmd_nms(ctx: &Ctx, a: NmsArgs) -> Result<Status> {
    let path = required(a.detections.or_else(|| ctx.cfg.nms.detections.clone()), "detections")?;
    require_existing([&path])?;
    let thr = a.iou_threshold.or(ctx.cfg.nms.iou_threshold).unwrap_or(0.5);
    if !(thr > 0.0 && thr <= 1.0) {
        return Err(Error::Config(format!("iou_threshold {thr} outside (0, 1]")));
    }
    let dets = read_detections_file(&path)?;
    let mut kept = Vec::new();
    for idx in group_detections(&dets).values() {
        let group: Vec<Detection> = idx.iter().map(|&i| dets[i].clone()).collect();
        kept.extend(nms_indices(&group, thr).into_iter().map(|k| group[k].clone()));
    }
    ctx.write("nms.jsonl", write_detections(&kept)?.as_bytes())?;
    log::info!("{} detection(s) -> {} after NMS at {thr}", dets.len(), kept.len());
    Ok(EXIT_OK)
}

fn parse_kind(s: &str) -> Result<IouKind> {
    match s.trim().to_lowercase().as_str() {
        "bbox" | "box" => Ok(IouKind::Bbox),
        "mask" | "segm" => Ok(IouKind::Mask),
        other => Err(Error::Config(format!("unknown IoU kind {other:?}; use bbox or mask"))),
    }
}

fn cmd_evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<Status> {
    let sec = &ctx.cfg.evaluate;
    let gt_root = required(a.gt.or_else(|| sec.ground_truth.clone()), "ground-truth dataset")?;
    let det_path = required(a.detections.or_else(|| sec.detections.clone()), "detections")?;
    require_existing([&gt_root, &det_path])?;
    let gt = load_annotations(&gt_root)?;
    let dets = read_detections_file(&det_path)?;
    let kinds = match a.iou_kind {
        Some(v) => v.iter().map(|s| parse_kind(s)).collect::<Result<Vec<_>>>()?,
        None => sec.iou_kinds.clone().unwrap_or_else(|| {
            if !dets.is_empty() && dets.iter().all(|d| d.rle.is_some()) {
                vec![IouKind::Bbox, IouKind::Mask]
            } else {
                vec![IouKind::Bbox]
            }
        }),
    };
    let defaults = EvalConfig::default();
    let mut summaries: Vec<EvalSummary> = Vec::new();
    for kind in kinds {
        let cfg = EvalConfig {
            iou_kind: kind,
            iou_thresholds: sec.iou_thresholds.clone().unwrap_or(defaults.iou_thresholds.clone()),
            max_dets_per_image: a.max_dets.or(sec.max_dets_per_image).unwrap_or(defaults.max_dets_per_image),
            ..defaults.clone()
        };
        summaries.push(evaluate(&gt, &dets, &cfg).map_err(|e| e.in_file(&det_path))?);
    }
    let table = format_table(&summaries);
    ctx.write("eval.json", &serde_json::to_vec_pretty(&summaries)?)?;
    ctx.write("eval.txt", table.as_bytes())?;
    for line in table.lines() {
        log::info!("{line}");
    }
    Ok(EXIT_OK)
}

fn box_mask(b: &BBox, w: usize, h: usize) -> RleMask {
    let mut m = BitMask::new(w, h);
    let clampi = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
    for r in clampi(b.y_min.floor(), h)..clampi(b.y_max.ceil(), h) {
        for c in clampi(b.x_min.floor(), w)..clampi(b.x_max.ceil(), w) {
            m.set(c, r, true);
        }
    }
    rle_encode(&m)
}

fn find_image(dir: &Path, id: &str) -> Option<PathBuf> {
    [dir.join(format!("{id}.png")), dir.join("images").join(format!("{id}.png"))]
        .into_iter()
        .find(|p| p.is_file())
}

#[derive(Serialize)]
struct ImageOccupancy {
    method: &'static str,
    #[serde(flatten)]
    report: OccupancyReport,
}

fn cmd_occupancy(ctx: &Ctx, a: OccupancyArgs) -> Result<Status> {
    let sec = &ctx.cfg.occupancy;
    let path = required(a.detections.or_else(|| sec.detections.clone()), "detections")?;
    let images = a.images.or_else(|| sec.images.clone());
    require_existing(std::iter::once(&path).chain(images.as_ref()))?;
    let threshold = a.threshold.or(sec.threshold).unwrap_or(DEFAULT_THRESHOLD);
    let min_score = a.min_score.or(sec.min_score).unwrap_or(0.0);
    let force_boxes = a.bboxes || sec.use_bboxes == Some(true);

    let dets: Vec<Detection> = read_detections_file(&path)?.into_iter().filter(|d| d.score >= min_score).collect();
    let mut by_image: IndexMap<&str, (Vec<&Detection>, Vec<&Detection>)> = IndexMap::new();
    for d in &dets {
        let e = by_image.entry(d.image_id.as_str()).or_default();
        match d.label {
            Label::ParkingSpace => e.0.push(d),
            Label::Vehicle => e.1.push(d),
        }
    }

    let mut all: IndexMap<String, ImageOccupancy> = IndexMap::new();
    let mut failed = 0;
    for (id, (spaces, vehicles)) in &by_image {
        let use_masks = !force_boxes && spaces.iter().chain(vehicles).all(|d| d.rle.is_some());
        let report = if use_masks {
            let sm: Vec<RleMask> = spaces.iter().filter_map(|d| d.rle.clone()).collect();
            let vm: Vec<RleMask> = vehicles.iter().filter_map(|d| d.rle.clone()).collect();
            assess_occupancy(&sm, &vm, threshold)
        } else {
            let sb: Vec<_> = spaces.iter().map(|d| d.bbox).collect();
            let vb: Vec<_> = vehicles.iter().map(|d| d.bbox).collect();
            occupancy_from_bboxes(&sb, &vb, threshold)
        };
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                log::error!("{id}: {e}");
                failed += 1;
                continue;
            }
        };
        ctx.write(&format!("{id}.occupancy.csv"), report.to_csv_string()?.as_bytes())?;
        if let Some(img_path) = images.as_deref().and_then(|dir| find_image(dir, id)) {
            let img = read_png(&img_path)?;
            let outlines: Vec<RleMask> = spaces
                .iter()
                .map(|d| match (&d.rle, use_masks) {
                    (Some(r), true) => r.clone(),
                    _ => box_mask(&d.bbox, img.width, img.height),
                })
                .collect();
            match render_overlay(&img, &outlines, &report) {
                Ok(ov) => write_rgb_png(&ov, ctx.out_file(&format!("{id}.overlay.png")))?,
                Err(e) => {
                    log::error!("{id}: overlay: {e}");
                    failed += 1;
                }
            }
        }
        log::info!(
            "{id}: {}/{} spaces occupied ({:.1}%)",
            report.occupied_count,
            report.total_spaces,
            report.utilization * 100.0
        );
        all.insert(
            id.to_string(),
            ImageOccupancy {
                method: if use_masks { "mask" } else { "bbox" },
                report,
            },
        );
    }
    ctx.write("occupancy.json", &serde_json::to_vec_pretty(&all)?)?;
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: Cli) -> Result<Status> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    let ctx = Ctx {
        out: cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        cfg,
    };
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::from(e).in_file(&ctx.out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Stitch(a) => cmd_stitch(&ctx, a),
        Command::Extract(a) => cmd_extract(&ctx, jobs, a),
        Command::Annotations(a) => cmd_annotations(&ctx, a),
        Command::Augment(a) => cmd_augment(&ctx, a),
        Command::Anchors(a) => cmd_anchors(&ctx, a),
        Command::Nms(a) => cmd_nms(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Occupancy(a) => cmd_occupancy(&ctx, a),
    })
}

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FATAL
        }
    }
}
