//! `.shp` / `.shx` Polygon records.
//!
//! Header and record-header integers are big-endian, everything else
//! little-endian. Lengths and offsets are counted in 16-bit words.

use std::path::{Path, PathBuf};

use super::dbf::{encode_dbf, parse_dbf};
use super::{ParcelFeature, Point, PolygonGeom};
use crate::error::{format_err, Error, Result};

const FILE_CODE: i32 = 9994;
const VERSION: i32 = 1000;
const HEADER_LEN: usize = 100;
const SHAPE_NULL: i32 = 0;
const SHAPE_POLYGON: i32 = 5;

fn be_i32(b: &[u8], at: usize) -> i32 {
    i32::from_be_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_i32(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Validates a main-file or index header, returning the declared shape type.
fn check_header(bytes: &[u8], what: &str) -> Result<i32> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(format!("{what} shorter than its 100-byte header")));
    }
    let code = be_i32(bytes, 0);
    if code != FILE_CODE {
        return Err(format_err(format!("{what} file code {code}, expected {FILE_CODE}")));
    }
    let version = le_i32(bytes, 28);
    if version != VERSION {
        return Err(format_err(format!("{what} version {version}, expected {VERSION}")));
    }
    let shape_type = le_i32(bytes, 32);
    if shape_type != SHAPE_POLYGON && shape_type != SHAPE_NULL {
        return Err(Error::UnsupportedShape(shape_type));
    }
    Ok(shape_type)
}

fn parse_polygon(content: &[u8], record: usize) -> Result<PolygonGeom> {
    let bad = |msg: String| format_err(format!("record {record}: {msg}"));
    if content.len() < 44 {
        return Err(bad("polygon record too short".into()));
    }
    let num_parts = le_i32(content, 36);
    let num_points = le_i32(content, 40);
    if num_parts < 1 || num_points < 0 {
        return Err(bad(format!("{num_parts} parts / {num_points} points")));
    }
    let (num_parts, num_points) = (num_parts as usize, num_points as usize);
    let points_at = 44 + 4 * num_parts;
    if content.len() < points_at + 16 * num_points {
        return Err(bad("point array runs past the record".into()));
    }
    let mut parts: Vec<usize> = Vec::with_capacity(num_parts);
    for p in 0..num_parts {
        let start = le_i32(content, 44 + 4 * p);
        if start < 0 || start as usize > num_points || parts.last().is_some_and(|&prev| start as usize <= prev) {
            return Err(bad(format!("invalid part index {start}")));
        }
        parts.push(start as usize);
    }
    let points: Vec<Point> = (0..num_points)
        .map(|i| (le_f64(content, points_at + 16 * i), le_f64(content, points_at + 16 * i + 8)))
        .collect();
    let mut rings = Vec::with_capacity(num_parts);
    for (p, &start) in parts.iter().enumerate() {
        let end = parts.get(p + 1).copied().unwrap_or(num_points);
        rings.push(points[start..end].to_vec());
    }
    PolygonGeom::new(rings).map_err(|e| bad(e.to_string()))
}

/// Parse the three shapefile components into parcel features.
///
/// Null records are skipped; `record_index` keeps the zero-based position of
/// each record so attributes and geometry stay paired.
pub fn parse_shapefile(shp: &[u8], shx: &[u8], dbf: &[u8]) -> Result<Vec<ParcelFeature>> {
    check_header(shp, ".shp")?;
    check_header(shx, ".shx")?;
    let table = parse_dbf(dbf)?;

    let index_len = (be_i32(shx, 24).max(0) as usize * 2).min(shx.len());
    if index_len < HEADER_LEN || !(index_len - HEADER_LEN).is_multiple_of(8) {
        return Err(format_err(format!(".shx length {index_len} is not a header plus 8-byte entries")));
    }
    let count = (index_len - HEADER_LEN) / 8;
    if count != table.records.len() {
        return Err(Error::Consistency(format!(
            ".shx lists {count} records but .dbf holds {}",
            table.records.len()
        )));
    }

    let mut features = Vec::with_capacity(count);
    for (i, attributes) in table.records.into_iter().enumerate() {
        let entry = HEADER_LEN + 8 * i;
        let offset = be_i32(shx, entry).max(0) as usize * 2;
        let len = be_i32(shx, entry + 4).max(0) as usize * 2;
        let header = shp
            .get(offset..offset + 8)
            .ok_or_else(|| format_err(format!("record {i}: .shx offset {offset} past end of .shp")))?;
        let number = be_i32(header, 0);
        let declared = be_i32(header, 4).max(0) as usize * 2;
        if number as usize != i + 1 || declared != len {
            return Err(Error::Consistency(format!(
                "record {i}: .shx entry (offset {offset}, {len} bytes) does not address .shp record {number} ({declared} bytes)"
            )));
        }
        let content = shp
            .get(offset + 8..offset + 8 + len)
            .ok_or_else(|| format_err(format!("record {i} truncated")))?;
        if content.len() < 4 {
            return Err(format_err(format!("record {i} has no shape type")));
        }
        match le_i32(content, 0) {
            SHAPE_NULL => continue,
            SHAPE_POLYGON => features.push(ParcelFeature {
                geometry: parse_polygon(content, i)?,
                attributes,
                record_index: i,
            }),
            other => return Err(Error::UnsupportedShape(other)),
        }
    }
    Ok(features)
}

/// Sibling `.shp` / `.shx` / `.dbf` paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapefilePaths {
    pub shp: PathBuf,
    pub shx: PathBuf,
    pub dbf: PathBuf,
}

impl ShapefilePaths {
    /// Derive the triple from any one member (or a bare stem).
    pub fn from_path(path: impl AsRef<Path>) -> Self {
        let p = path.as_ref();
        Self {
            shp: p.with_extension("shp"),
            shx: p.with_extension("shx"),
            dbf: p.with_extension("dbf"),
        }
    }
}

pub fn read_shapefile(path: impl AsRef<Path>) -> Result<Vec<ParcelFeature>> {
    let paths = ShapefilePaths::from_path(&path);
    let read = |p: &PathBuf| std::fs::read(p).map_err(|e| Error::from(e).in_file(p));
    parse_shapefile(&read(&paths.shp)?, &read(&paths.shx)?, &read(&paths.dbf)?)
        .map_err(|e| e.in_file(&paths.shp))
}

/// In-memory shapefile triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapefileBytes {
    pub shp: Vec<u8>,
    pub shx: Vec<u8>,
    pub dbf: Vec<u8>,
}

fn header(file_words: usize, bbox: [f64; 4]) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(&FILE_CODE.to_be_bytes());
    h.extend_from_slice(&[0; 20]);
    h.extend_from_slice(&(file_words as i32).to_be_bytes());
    h.extend_from_slice(&VERSION.to_le_bytes());
    h.extend_from_slice(&SHAPE_POLYGON.to_le_bytes());
    for v in bbox.iter().chain(&[0.0; 4]) {
        h.extend_from_slice(&v.to_le_bytes());
    }
    h
}

/// Encode features as a Polygon shapefile. Records are renumbered from 1 in
/// input order; header bounding boxes are recomputed.
pub fn encode_shapefile(features: &[ParcelFeature]) -> Result<ShapefileBytes> {
    if features.is_empty() {
        return Err(Error::Precondition("cannot write a shapefile with no features".into()));
    }
    let mut records = Vec::new();
    let mut index = Vec::new();
    let mut total = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut offset_words = HEADER_LEN / 2;
    for (i, f) in features.iter().enumerate() {
        let rings = f.geometry.rings();
        let bbox = f.geometry.bbox();
        total = [
            total[0].min(bbox[0]),
            total[1].min(bbox[1]),
            total[2].max(bbox[2]),
            total[3].max(bbox[3]),
        ];
        let num_points = f.geometry.point_count();
        let content_bytes = 44 + 4 * rings.len() + 16 * num_points;
        let content_words = content_bytes / 2;

        records.extend_from_slice(&(i as i32 + 1).to_be_bytes());
        records.extend_from_slice(&(content_words as i32).to_be_bytes());
        records.extend_from_slice(&SHAPE_POLYGON.to_le_bytes());
        for v in bbox {
            records.extend_from_slice(&v.to_le_bytes());
        }
        records.extend_from_slice(&(rings.len() as i32).to_le_bytes());
        records.extend_from_slice(&(num_points as i32).to_le_bytes());
        let mut start = 0i32;
        for r in rings {
            records.extend_from_slice(&start.to_le_bytes());
            start += r.len() as i32;
        }
        for &(x, y) in rings.iter().flatten() {
            records.extend_from_slice(&x.to_le_bytes());
            records.extend_from_slice(&y.to_le_bytes());
        }

        index.extend_from_slice(&(offset_words as i32).to_be_bytes());
        index.extend_from_slice(&(content_words as i32).to_be_bytes());
        offset_words += 4 + content_words;
    }
    if offset_words > i32::MAX as usize {
        return Err(Error::Precondition(".shp would exceed the 2 GiB format limit".into()));
    }

    let mut shp = header(offset_words, total);
    shp.extend_from_slice(&records);
    let mut shx = header((HEADER_LEN + index.len()) / 2, total);
    shx.extend_from_slice(&index);
    let rows: Vec<_> = features.iter().map(|f| &f.attributes).collect();
    let dbf = encode_dbf(&rows)?;
    Ok(ShapefileBytes { shp, shx, dbf })
}

/// Write features as a new shapefile triple.
pub fn write_subset_shapefile(features: &[ParcelFeature], paths: &ShapefilePaths) -> Result<()> {
    let bytes = encode_shapefile(features)?;
    for (path, data) in [(&paths.shp, &bytes.shp), (&paths.shx, &bytes.shx), (&paths.dbf, &bytes.dbf)] {
        std::fs::write(path, data).map_err(|e| Error::from(e).in_file(path))?;
    }
    Ok(())
}
