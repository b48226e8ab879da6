//! Baseline TIFF 6.0 subset with GeoTIFF pixel-scale/tiepoint georeferencing.
//!
//! Reading covers both byte orders, strips and tiles, 8-bit chunky samples,
//! no compression or Deflate (with optional horizontal predictor). Writing
//! emits little- or big-endian stripped files with the same tags.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;

use super::{GeoRaster, GeoTransform};
use crate::error::{format_err, Error, Result};

const TAG_IMAGE_WIDTH: u16 = 256;
const TAG_IMAGE_LENGTH: u16 = 257;
const TAG_BITS_PER_SAMPLE: u16 = 258;
const TAG_COMPRESSION: u16 = 259;
const TAG_PHOTOMETRIC: u16 = 262;
const TAG_STRIP_OFFSETS: u16 = 273;
const TAG_SAMPLES_PER_PIXEL: u16 = 277;
const TAG_ROWS_PER_STRIP: u16 = 278;
const TAG_STRIP_BYTE_COUNTS: u16 = 279;
const TAG_PLANAR_CONFIG: u16 = 284;
const TAG_PREDICTOR: u16 = 317;
const TAG_TILE_WIDTH: u16 = 322;
const TAG_TILE_LENGTH: u16 = 323;
const TAG_TILE_OFFSETS: u16 = 324;
const TAG_TILE_BYTE_COUNTS: u16 = 325;
const TAG_SAMPLE_FORMAT: u16 = 339;
const TAG_MODEL_PIXEL_SCALE: u16 = 33550;
const TAG_MODEL_TIEPOINT: u16 = 33922;
const TAG_GEO_KEY_DIRECTORY: u16 = 34735;

const KEY_MODEL_TYPE: u16 = 1024;
const KEY_RASTER_TYPE: u16 = 1025;
const KEY_GEOGRAPHIC_TYPE: u16 = 2048;
const KEY_PROJECTED_CS_TYPE: u16 = 3072;
const RASTER_PIXEL_IS_AREA: u16 = 1;
const RASTER_PIXEL_IS_POINT: u16 = 2;

const COMPRESSION_NONE: u64 = 1;
const COMPRESSION_DEFLATE: u64 = 8;
const COMPRESSION_DEFLATE_OLD: u64 = 32946;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ByteOrder {
    #[default]
    Little,
    Big,
}

impl ByteOrder {
    fn u16(self, b: &[u8]) -> u16 {
        let a = [b[0], b[1]];
        match self {
            ByteOrder::Little => u16::from_le_bytes(a),
            ByteOrder::Big => u16::from_be_bytes(a),
        }
    }

    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            ByteOrder::Little => u32::from_le_bytes(a),
            ByteOrder::Big => u32::from_be_bytes(a),
        }
    }

    fn u64(self, b: &[u8]) -> u64 {
        let a: [u8; 8] = b[..8].try_into().unwrap();
        match self {
            ByteOrder::Little => u64::from_le_bytes(a),
            ByteOrder::Big => u64::from_be_bytes(a),
        }
    }

    fn put_u16(self, out: &mut Vec<u8>, v: u16) {
        match self {
            ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
            ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }

    fn put_u32(self, out: &mut Vec<u8>, v: u32) {
        match self {
            ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
            ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }

    fn put_f64(self, out: &mut Vec<u8>, v: f64) {
        match self {
            ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
            ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }
}

/// TIFF field types we understand, with their byte sizes.
fn type_size(field_type: u16) -> Option<usize> {
    match field_type {
        1 | 2 | 6 | 7 => Some(1),
        3 | 8 => Some(2),
        4 | 9 | 11 => Some(4),
        5 | 10 | 12 => Some(8),
        _ => None,
    }
}

struct Entry<'a> {
    field_type: u16,
    count: usize,
    data: &'a [u8],
}

impl Entry<'_> {
    fn values(&self, order: ByteOrder) -> Vec<f64> {
        let size = type_size(self.field_type).unwrap_or(1);
        (0..self.count)
            .map(|i| {
                let b = &self.data[i * size..(i + 1) * size];
                match self.field_type {
                    1 | 7 => b[0] as f64,
                    6 => b[0] as i8 as f64,
                    3 => order.u16(b) as f64,
                    8 => order.u16(b) as i16 as f64,
                    4 => order.u32(b) as f64,
                    9 => order.u32(b) as i32 as f64,
                    11 => f32::from_bits(order.u32(b)) as f64,
                    12 => f64::from_bits(order.u64(b)),
                    5 => order.u32(b) as f64 / order.u32(&b[4..]) as f64,
                    10 => order.u32(b) as i32 as f64 / order.u32(&b[4..]) as i32 as f64,
                    _ => f64::NAN,
                }
            })
            .collect()
    }

    fn unsigned(&self, order: ByteOrder) -> Result<Vec<u64>> {
        if !matches!(self.field_type, 1 | 3 | 4) {
            return Err(format_err(format!("expected an unsigned integer field, got type {}", self.field_type)));
        }
        Ok(self.values(order).into_iter().map(|v| v as u64).collect())
    }
}

struct Ifd<'a> {
    order: ByteOrder,
    entries: BTreeMap<u16, Entry<'a>>,
}

impl Ifd<'_> {
    fn uints(&self, tag: u16) -> Result<Option<Vec<u64>>> {
        self.entries
            .get(&tag)
            .map(|e| e.unsigned(self.order).map_err(|err| format_err(format!("tag {tag}: {err}"))))
            .transpose()
    }

    fn uint(&self, tag: u16) -> Result<Option<u64>> {
        Ok(self.uints(tag)?.and_then(|v| v.first().copied()))
    }

    fn required_uint(&self, tag: u16) -> Result<u64> {
        self.uint(tag)?.ok_or_else(|| format_err(format!("missing required tag {tag}")))
    }

    fn reals(&self, tag: u16) -> Option<Vec<f64>> {
        self.entries.get(&tag).map(|e| e.values(self.order))
    }
}

fn slice(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    offset
        .checked_add(len)
        .and_then(|end| bytes.get(offset..end))
        .ok_or_else(|| format_err(format!("truncated file: need bytes {offset}..{}", offset.saturating_add(len))))
}

fn read_ifd(bytes: &[u8], order: ByteOrder, offset: usize) -> Result<Ifd<'_>> {
    let count = order.u16(slice(bytes, offset, 2)?) as usize;
    let raw = slice(bytes, offset + 2, count * 12)?;
    let mut entries = BTreeMap::new();
    for chunk in raw.chunks_exact(12) {
        let tag = order.u16(chunk);
        let field_type = order.u16(&chunk[2..]);
        let n = order.u32(&chunk[4..]) as usize;
        let Some(size) = type_size(field_type) else {
            log::warn!("skipping tag {tag} with unknown field type {field_type}");
            continue;
        };
        let total = n
            .checked_mul(size)
            .ok_or_else(|| format_err(format!("tag {tag}: value count overflow")))?;
        let data = if total <= 4 {
            &chunk[8..8 + total]
        } else {
            slice(bytes, order.u32(&chunk[8..]) as usize, total)?
        };
        entries.insert(
            tag,
            Entry {
                field_type,
                count: n,
                data,
            },
        );
    }
    Ok(Ifd { order, entries })
}

fn decompress(data: &[u8], compression: u64, expected: usize) -> Result<Vec<u8>> {
    let mut out = match compression {
        COMPRESSION_NONE => data.to_vec(),
        _ => {
            let mut buf = Vec::with_capacity(expected);
            ZlibDecoder::new(data)
                .read_to_end(&mut buf)
                .map_err(|e| format_err(format!("deflate stream: {e}")))?;
            buf
        }
    };
    if out.len() < expected {
        return Err(format_err(format!(
            "segment holds {} bytes, expected {expected}",
            out.len()
        )));
    }
    out.truncate(expected);
    Ok(out)
}

/// Undo horizontal differencing on rows of `row_len` bytes.
fn undo_predictor(buf: &mut [u8], row_len: usize, samples: usize) {
    for row in buf.chunks_mut(row_len) {
        for i in samples..row.len() {
            row[i] = row[i].wrapping_add(row[i - samples]);
        }
    }
}

/// Parse a GeoTIFF held in memory. Bands past the third are dropped.
pub fn parse_geotiff(bytes: &[u8]) -> Result<GeoRaster> {
    let head = slice(bytes, 0, 8).map_err(|_| format_err("file shorter than a TIFF header"))?;
    let order = match &head[..2] {
        b"II" => ByteOrder::Little,
        b"MM" => ByteOrder::Big,
        _ => return Err(format_err("missing II/MM byte-order mark")),
    };
    match order.u16(&head[2..]) {
        42 => {}
        43 => return Err(Error::Unsupported("BigTIFF".into())),
        magic => return Err(format_err(format!("bad TIFF magic {magic}"))),
    }
    let ifd = read_ifd(bytes, order, order.u32(&head[4..]) as usize)?;

    let width = ifd.required_uint(TAG_IMAGE_WIDTH)? as usize;
    let height = ifd.required_uint(TAG_IMAGE_LENGTH)? as usize;
    if width == 0 || height == 0 {
        return Err(format_err("zero image dimension"));
    }
    let samples = ifd.uint(TAG_SAMPLES_PER_PIXEL)?.unwrap_or(1) as usize;
    let bits = ifd.uints(TAG_BITS_PER_SAMPLE)?.unwrap_or_else(|| vec![1]);
    if bits.iter().any(|&b| b != 8) {
        return Err(Error::Unsupported(format!("bits per sample {bits:?} (only 8 is supported)")));
    }
    if samples < 3 {
        return Err(Error::Unsupported(format!("{samples} band(s); at least 3 are required")));
    }
    if let Some(fmt) = ifd.uints(TAG_SAMPLE_FORMAT)? {
        if fmt.iter().any(|&f| f != 1) {
            return Err(Error::Unsupported(format!("sample format {fmt:?} (only unsigned integers)")));
        }
    }
    if ifd.uint(TAG_PLANAR_CONFIG)?.unwrap_or(1) != 1 {
        return Err(Error::Unsupported("planar (band-separate) layout".into()));
    }
    if ifd.uint(TAG_PHOTOMETRIC)? == Some(3) {
        return Err(Error::Unsupported("palette colour".into()));
    }
    let compression = ifd.uint(TAG_COMPRESSION)?.unwrap_or(COMPRESSION_NONE);
    if !matches!(compression, COMPRESSION_NONE | COMPRESSION_DEFLATE | COMPRESSION_DEFLATE_OLD) {
        return Err(Error::Unsupported(format!("compression scheme {compression}")));
    }
    let predictor = ifd.uint(TAG_PREDICTOR)?.unwrap_or(1);
    if !matches!(predictor, 1 | 2) {
        return Err(Error::Unsupported(format!("predictor {predictor}")));
    }

    let transform = read_georeferencing(&ifd)?;

    let mut full = vec![0u8; width * height * samples];
    let row_bytes = width * samples;
    if let Some(tile_offsets) = ifd.uints(TAG_TILE_OFFSETS)? {
        let tile_w = ifd.required_uint(TAG_TILE_WIDTH)? as usize;
        let tile_h = ifd.required_uint(TAG_TILE_LENGTH)? as usize;
        let counts = ifd
            .uints(TAG_TILE_BYTE_COUNTS)?
            .ok_or_else(|| format_err("missing TileByteCounts"))?;
        if tile_w == 0 || tile_h == 0 {
            return Err(format_err("zero tile dimension"));
        }
        let across = width.div_ceil(tile_w);
        let down = height.div_ceil(tile_h);
        if tile_offsets.len() < across * down || counts.len() < across * down {
            return Err(format_err(format!(
                "{} tile offsets for a {across}x{down} tile grid",
                tile_offsets.len()
            )));
        }
        let tile_row = tile_w * samples;
        for ty in 0..down {
            for tx in 0..across {
                let i = ty * across + tx;
                let raw = slice(bytes, tile_offsets[i] as usize, counts[i] as usize)?;
                let mut tile = decompress(raw, compression, tile_row * tile_h)?;
                if predictor == 2 {
                    undo_predictor(&mut tile, tile_row, samples);
                }
                let cols = tile_w.min(width - tx * tile_w);
                for r in 0..tile_h.min(height - ty * tile_h) {
                    let dst = ((ty * tile_h + r) * width + tx * tile_w) * samples;
                    full[dst..dst + cols * samples].copy_from_slice(&tile[r * tile_row..r * tile_row + cols * samples]);
                }
            }
        }
    } else {
        let offsets = ifd
            .uints(TAG_STRIP_OFFSETS)?
            .ok_or_else(|| format_err("neither strip nor tile offsets present"))?;
        let counts = ifd
            .uints(TAG_STRIP_BYTE_COUNTS)?
            .ok_or_else(|| format_err("missing StripByteCounts"))?;
        let rows_per_strip = (ifd.uint(TAG_ROWS_PER_STRIP)?.unwrap_or(height as u64) as usize).clamp(1, height);
        let strips = height.div_ceil(rows_per_strip);
        if offsets.len() < strips || counts.len() < strips {
            return Err(format_err(format!("{} strip offsets for {strips} strips", offsets.len())));
        }
        for s in 0..strips {
            let rows = rows_per_strip.min(height - s * rows_per_strip);
            let raw = slice(bytes, offsets[s] as usize, counts[s] as usize)?;
            let mut strip = decompress(raw, compression, rows * row_bytes)?;
            if predictor == 2 {
                undo_predictor(&mut strip, row_bytes, samples);
            }
            let dst = s * rows_per_strip * row_bytes;
            full[dst..dst + strip.len()].copy_from_slice(&strip);
        }
    }

    let pixels = if samples == 3 {
        full
    } else {
        full.chunks_exact(samples).flat_map(|px| px[..3].iter().copied()).collect()
    };
    GeoRaster::new(width, height, 3, pixels, transform)
}

fn read_georeferencing(ifd: &Ifd<'_>) -> Result<GeoTransform> {
    let scale = ifd
        .reals(TAG_MODEL_PIXEL_SCALE)
        .ok_or_else(|| Error::Georef(format!("missing ModelPixelScale tag {TAG_MODEL_PIXEL_SCALE}")))?;
    let tie = ifd
        .reals(TAG_MODEL_TIEPOINT)
        .ok_or_else(|| Error::Georef(format!("missing ModelTiepoint tag {TAG_MODEL_TIEPOINT}")))?;
    if scale.len() < 2 {
        return Err(Error::Georef(format!("ModelPixelScale tag {TAG_MODEL_PIXEL_SCALE} has {} values", scale.len())));
    }
    if tie.len() < 6 {
        return Err(Error::Georef(format!("ModelTiepoint tag {TAG_MODEL_TIEPOINT} has {} values", tie.len())));
    }
    let (sx, sy) = (scale[0], scale[1]);
    let (i, j, x, y) = (tie[0], tie[1], tie[3], tie[4]);

    let keys = ifd
        .uints(TAG_GEO_KEY_DIRECTORY)?
        .map(|dir| parse_geokeys(&dir))
        .unwrap_or_default();
    let crs_code = keys
        .get(&KEY_PROJECTED_CS_TYPE)
        .or_else(|| keys.get(&KEY_GEOGRAPHIC_TYPE))
        .copied()
        .unwrap_or(0) as u32;

    let mut origin_x = x - i * sx;
    let mut origin_y = y + j * sy;
    if keys.get(&KEY_RASTER_TYPE) == Some(&(RASTER_PIXEL_IS_POINT as u64)) {
        // tiepoint refers to the pixel centre
        origin_x -= sx / 2.0;
        origin_y += sy / 2.0;
    }
    GeoTransform::new(origin_x, origin_y, sx, sy, crs_code)
}

/// Inline-valued GeoKeys (TIFFTagLocation 0) as a key -> value map.
fn parse_geokeys(dir: &[u64]) -> BTreeMap<u16, u64> {
    let mut keys = BTreeMap::new();
    if dir.len() < 4 {
        return keys;
    }
    let n = dir[3] as usize;
    for k in dir[4..].chunks_exact(4).take(n) {
        if k[1] == 0 {
            keys.insert(k[0] as u16, k[3]);
        }
    }
    keys
}

pub fn read_geotiff(path: impl AsRef<Path>) -> Result<GeoRaster> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_geotiff(&bytes).map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiffCompression {
    #[default]
    None,
    Deflate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TiffWriteOptions {
    pub byte_order: ByteOrder,
    pub compression: TiffCompression,
    pub rows_per_strip: usize,
}

impl Default for TiffWriteOptions {
    fn default() -> Self {
        Self {
            byte_order: ByteOrder::Little,
            compression: TiffCompression::None,
            rows_per_strip: 64,
        }
    }
}

enum Value {
    Short(Vec<u16>),
    Long(Vec<u32>),
    Double(Vec<f64>),
}

impl Value {
    fn field_type(&self) -> u16 {
        match self {
            Value::Short(_) => 3,
            Value::Long(_) => 4,
            Value::Double(_) => 12,
        }
    }

    fn count(&self) -> usize {
        match self {
            Value::Short(v) => v.len(),
            Value::Long(v) => v.len(),
            Value::Double(v) => v.len(),
        }
    }

    fn encode(&self, order: ByteOrder) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Value::Short(v) => v.iter().for_each(|&x| order.put_u16(&mut out, x)),
            Value::Long(v) => v.iter().for_each(|&x| order.put_u32(&mut out, x)),
            Value::Double(v) => v.iter().for_each(|&x| order.put_f64(&mut out, x)),
        }
        out
    }
}

/// Encode a 3-band raster as a stripped GeoTIFF.
pub fn write_geotiff(r: &GeoRaster, opts: &TiffWriteOptions) -> Result<Vec<u8>> {
    if r.band_count() != 3 {
        return Err(Error::Precondition(format!(
            "GeoTIFF output needs 3 bands, raster has {}",
            r.band_count()
        )));
    }
    let order = opts.byte_order;
    let (w, h) = (r.width(), r.height());
    let rows_per_strip = opts.rows_per_strip.clamp(1, h);
    let row_bytes = w * 3;

    let mut strips = Vec::new();
    for chunk in r.pixels().chunks(rows_per_strip * row_bytes) {
        strips.push(match opts.compression {
            TiffCompression::None => chunk.to_vec(),
            TiffCompression::Deflate => {
                let mut enc = ZlibEncoder::new(Vec::new(), flate2::Compression::default());
                enc.write_all(chunk)?;
                enc.finish()?
            }
        });
    }

    let t = r.transform();
    let mut geokeys: Vec<[u16; 4]> = vec![[KEY_RASTER_TYPE, 0, 1, RASTER_PIXEL_IS_AREA]];
    if t.crs_code != 0 {
        let code = u16::try_from(t.crs_code)
            .map_err(|_| Error::Precondition(format!("CRS code {} does not fit a GeoKey", t.crs_code)))?;
        let geographic = (4000..5000).contains(&code);
        geokeys.push([KEY_MODEL_TYPE, 0, 1, if geographic { 2 } else { 1 }]);
        geokeys.push([if geographic { KEY_GEOGRAPHIC_TYPE } else { KEY_PROJECTED_CS_TYPE }, 0, 1, code]);
    }
    geokeys.sort();
    let mut key_dir = vec![1, 1, 0, geokeys.len() as u16];
    key_dir.extend(geokeys.iter().flatten());

    // Strip offsets are patched once the layout is known.
    let mut tags: BTreeMap<u16, Value> = BTreeMap::new();
    tags.insert(TAG_IMAGE_WIDTH, Value::Long(vec![w as u32]));
    tags.insert(TAG_IMAGE_LENGTH, Value::Long(vec![h as u32]));
    tags.insert(TAG_BITS_PER_SAMPLE, Value::Short(vec![8, 8, 8]));
    tags.insert(
        TAG_COMPRESSION,
        Value::Short(vec![match opts.compression {
            TiffCompression::None => COMPRESSION_NONE as u16,
            TiffCompression::Deflate => COMPRESSION_DEFLATE as u16,
        }]),
    );
    tags.insert(TAG_PHOTOMETRIC, Value::Short(vec![2]));
    tags.insert(TAG_STRIP_OFFSETS, Value::Long(vec![0; strips.len()]));
    tags.insert(TAG_SAMPLES_PER_PIXEL, Value::Short(vec![3]));
    tags.insert(TAG_ROWS_PER_STRIP, Value::Long(vec![rows_per_strip as u32]));
    tags.insert(
        TAG_STRIP_BYTE_COUNTS,
        Value::Long(strips.iter().map(|s| s.len() as u32).collect()),
    );
    tags.insert(TAG_PLANAR_CONFIG, Value::Short(vec![1]));
    tags.insert(TAG_MODEL_PIXEL_SCALE, Value::Double(vec![t.pixel_size_x, t.pixel_size_y, 0.0]));
    tags.insert(
        TAG_MODEL_TIEPOINT,
        Value::Double(vec![0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0]),
    );
    tags.insert(TAG_GEO_KEY_DIRECTORY, Value::Short(key_dir));

    let ifd_offset = 8usize;
    let ifd_len = 2 + tags.len() * 12 + 4;
    let overflow_len: usize = tags
        .values()
        .map(|v| v.encode(order).len())
        .filter(|&n| n > 4)
        .map(|n| n + (n & 1))
        .sum();
    let mut data_offset = ifd_offset + ifd_len + overflow_len;
    let mut offsets = Vec::with_capacity(strips.len());
    for s in &strips {
        offsets.push(data_offset as u32);
        data_offset += s.len();
    }
    u32::try_from(data_offset).map_err(|_| Error::Precondition("raster too large for classic TIFF".into()))?;
    tags.insert(TAG_STRIP_OFFSETS, Value::Long(offsets));

    let mut out = Vec::with_capacity(data_offset);
    out.extend_from_slice(match order {
        ByteOrder::Little => b"II",
        ByteOrder::Big => b"MM",
    });
    order.put_u16(&mut out, 42);
    order.put_u32(&mut out, ifd_offset as u32);
    order.put_u16(&mut out, tags.len() as u16);
    let mut overflow = Vec::new();
    let overflow_start = ifd_offset + ifd_len;
    for (&tag, value) in &tags {
        let encoded = value.encode(order);
        order.put_u16(&mut out, tag);
        order.put_u16(&mut out, value.field_type());
        order.put_u32(&mut out, value.count() as u32);
        if encoded.len() <= 4 {
            let mut inline = encoded.clone();
            inline.resize(4, 0);
            out.extend_from_slice(&inline);
        } else {
            order.put_u32(&mut out, (overflow_start + overflow.len()) as u32);
            overflow.extend_from_slice(&encoded);
            if overflow.len() % 2 == 1 {
                overflow.push(0);
            }
        }
    }
    order.put_u32(&mut out, 0);
    out.extend_from_slice(&overflow);
    for s in &strips {
        out.extend_from_slice(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(w: usize, h: usize, seed: u8, t: GeoTransform) -> GeoRaster {
        let px = (0..w * h * 3).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        GeoRaster::new(w, h, 3, px, t).unwrap()
    }

    #[test]
    fn one_pixel_identity_georeferencing() {
        let r = GeoRaster::new(1, 1, 3, vec![0, 0, 0], GeoTransform::identity()).unwrap();
        let parsed = parse_geotiff(&write_geotiff(&r, &TiffWriteOptions::default()).unwrap()).unwrap();
        assert_eq!((parsed.width(), parsed.height(), parsed.band_count()), (1, 1, 3));
        assert_eq!(parsed.transform().origin_x, 0.0);
        assert_eq!(parsed.transform().origin_y, 0.0);
    }

    #[test]
    fn writer_round_trips_every_option() {
        let t = GeoTransform::new(500_000.25, 3_700_000.5, 0.6, 0.6, 26911).unwrap();
        let r = raster(13, 9, 7, t);
        for byte_order in [ByteOrder::Little, ByteOrder::Big] {
            for compression in [TiffCompression::None, TiffCompression::Deflate] {
                for rows_per_strip in [1, 4, 9, 100] {
                    let opts = TiffWriteOptions {
                        byte_order,
                        compression,
                        rows_per_strip,
                    };
                    let parsed = parse_geotiff(&write_geotiff(&r, &opts).unwrap()).unwrap();
                    assert_eq!(parsed, r, "{opts:?}");
                }
            }
        }
    }

    #[test]
    fn geographic_crs_round_trips() {
        let t = GeoTransform::new(-111.9, 33.5, 1e-5, 1e-5, 4326).unwrap();
        let r = raster(2, 2, 1, t);
        let parsed = parse_geotiff(&write_geotiff(&r, &TiffWriteOptions::default()).unwrap()).unwrap();
        assert_eq!(parsed.transform().crs_code, 4326);
    }

    #[test]
    fn bad_header_is_format_error() {
        assert!(matches!(parse_geotiff(b"XX*\0\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(parse_geotiff(b"II"), Err(Error::Format(_))));
        assert!(matches!(parse_geotiff(b"II\x2b\0\x08\0\0\0"), Err(Error::Unsupported(_))));
    }

    /// Rewrites one tag id in the first IFD of a little-endian file.
    fn rename_tag(bytes: &mut [u8], from: u16, to: u16) {
        let ifd = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let n = u16::from_le_bytes([bytes[ifd], bytes[ifd + 1]]) as usize;
        for k in 0..n {
            let at = ifd + 2 + k * 12;
            if u16::from_le_bytes([bytes[at], bytes[at + 1]]) == from {
                bytes[at..at + 2].copy_from_slice(&to.to_le_bytes());
            }
        }
    }

    #[test]
    fn missing_tiepoint_names_the_tag() {
        let r = raster(2, 2, 0, GeoTransform::identity());
        let mut bytes = write_geotiff(&r, &TiffWriteOptions::default()).unwrap();
        // 33923 is an unassigned private tag, so the tiepoint disappears while
        // the IFD stays sorted.
        rename_tag(&mut bytes, TAG_MODEL_TIEPOINT, 33923);
        match parse_geotiff(&bytes) {
            Err(Error::Georef(msg)) => assert!(msg.contains("33922"), "{msg}"),
            other => panic!("expected georeferencing error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_compression_is_reported() {
        let r = raster(2, 2, 0, GeoTransform::identity());
        let mut bytes = write_geotiff(&r, &TiffWriteOptions::default()).unwrap();
        let ifd = 8;
        let n = u16::from_le_bytes([bytes[ifd], bytes[ifd + 1]]) as usize;
        for k in 0..n {
            let at = ifd + 2 + k * 12;
            if u16::from_le_bytes([bytes[at], bytes[at + 1]]) == TAG_COMPRESSION {
                bytes[at + 8..at + 10].copy_from_slice(&7u16.to_le_bytes());
            }
        }
        assert!(matches!(parse_geotiff(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn predictor_is_undone() {
        let mut row = vec![10u8, 20, 30, 1, 1, 1, 2, 2, 2];
        undo_predictor(&mut row, 9, 3);
        assert_eq!(row, vec![10, 20, 30, 11, 21, 31, 13, 23, 33]);
    }
}
