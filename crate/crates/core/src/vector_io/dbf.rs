//! dBASE III tables: Character, Numeric and Float fields.

use indexmap::IndexMap;

use super::AttrValue;
use crate::error::{format_err, Error, Result};

const HEADER_TERMINATOR: u8 = 0x0D;
const FILE_TERMINATOR: u8 = 0x1A;
const MAX_FIELD_LEN: usize = 254;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbfField {
    pub name: String,
    /// dBASE type letter: `C`, `N`, `F` (others are read as text).
    pub field_type: u8,
    pub length: usize,
    pub decimals: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbfTable {
    pub fields: Vec<DbfField>,
    pub records: Vec<IndexMap<String, AttrValue>>,
}

fn decode_text(raw: &[u8]) -> String {
    match std::str::from_utf8(raw) {
        Ok(s) => s.to_owned(),
        // dBASE files are usually single-byte code pages; map bytes as Latin-1
        Err(_) => raw.iter().map(|&b| b as char).collect(),
    }
}

pub(crate) fn parse_dbf(bytes: &[u8]) -> Result<DbfTable> {
    if bytes.len() < 32 {
        return Err(format_err("dbf shorter than its 32-byte header"));
    }
    if bytes[0] & 0x07 != 0x03 {
        return Err(format_err(format!("dbf version byte {:#04x} is not dBASE III", bytes[0])));
    }
    let record_count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let record_len = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;

    let mut fields = Vec::new();
    let mut at = 32;
    while at < bytes.len() && bytes[at] != HEADER_TERMINATOR {
        let d = bytes
            .get(at..at + 32)
            .ok_or_else(|| format_err("truncated dbf field descriptor"))?;
        let name_end = d[..11].iter().position(|&b| b == 0).unwrap_or(11);
        let field = DbfField {
            name: decode_text(&d[..name_end]).trim().to_owned(),
            field_type: d[11],
            length: d[16] as usize,
            decimals: d[17],
        };
        if !matches!(field.field_type, b'C' | b'N' | b'F') {
            log::warn!(
                "dbf field {:?} has type {:?}; reading it as text",
                field.name,
                field.field_type as char
            );
        }
        fields.push(field);
        at += 32;
    }
    if at >= bytes.len() {
        return Err(format_err("dbf header terminator missing"));
    }
    let declared: usize = 1 + fields.iter().map(|f| f.length).sum::<usize>();
    if declared != record_len {
        return Err(format_err(format!(
            "dbf record length {record_len} disagrees with field widths {declared}"
        )));
    }

    let mut records = Vec::with_capacity(record_count);
    for i in 0..record_count {
        let start = header_len + i * record_len;
        let rec = bytes
            .get(start..start + record_len)
            .ok_or_else(|| format_err(format!("dbf truncated at record {i}")))?;
        if rec[0] == b'*' {
            log::warn!("dbf record {i} is flagged deleted; keeping it to preserve record alignment");
        }
        let mut row = IndexMap::with_capacity(fields.len());
        let mut pos = 1;
        for f in &fields {
            let raw = decode_text(&rec[pos..pos + f.length]);
            pos += f.length;
            let text = raw.trim();
            let value = match f.field_type {
                b'N' | b'F' => {
                    if text.is_empty() || text.chars().all(|c| c == '*') {
                        AttrValue::Null
                    } else {
                        match text.parse::<f64>() {
                            Ok(v) => AttrValue::Number(v),
                            Err(_) => {
                                log::warn!("dbf record {i} field {:?}: {text:?} is not numeric", f.name);
                                AttrValue::Text(text.to_owned())
                            }
                        }
                    }
                }
                _ => AttrValue::Text(text.to_owned()),
            };
            row.insert(f.name.clone(), value);
        }
        records.push(row);
    }
    Ok(DbfTable { fields, records })
}

fn render(v: &AttrValue) -> String {
    v.to_string()
}

/// Encode attribute rows. All rows must carry the same field names in the same order.
pub(crate) fn encode_dbf(rows: &[&IndexMap<String, AttrValue>]) -> Result<Vec<u8>> {
    let names: Vec<&String> = rows.first().map(|r| r.keys().collect()).unwrap_or_default();
    for (i, r) in rows.iter().enumerate() {
        if !r.keys().eq(names.iter().copied()) {
            return Err(Error::Consistency(format!("feature {i} has a different attribute set")));
        }
    }

    let mut fields = Vec::with_capacity(names.len());
    for (col, name) in names.iter().enumerate() {
        if name.is_empty() || name.len() > 10 {
            return Err(Error::Precondition(format!("dbf field name {name:?} must be 1-10 bytes")));
        }
        let numeric = rows
            .iter()
            .all(|r| matches!(r[col], AttrValue::Number(_) | AttrValue::Null));
        let length = rows.iter().map(|r| render(&r[col]).len()).max().unwrap_or(0).max(1);
        if length > MAX_FIELD_LEN {
            return Err(Error::Precondition(format!("field {name:?} value exceeds {MAX_FIELD_LEN} bytes")));
        }
        let decimals = if numeric {
            rows.iter()
                .map(|r| render(&r[col]).split_once('.').map_or(0, |(_, frac)| frac.len()))
                .max()
                .unwrap_or(0)
                .min(15) as u8
        } else {
            0
        };
        fields.push(DbfField {
            name: (*name).clone(),
            field_type: if numeric { b'N' } else { b'C' },
            length,
            decimals,
        });
    }

    let header_len = 32 + 32 * fields.len() + 1;
    let record_len = 1 + fields.iter().map(|f| f.length).sum::<usize>();
    if header_len > u16::MAX as usize || record_len > u16::MAX as usize {
        return Err(Error::Precondition("dbf header or record too long".into()));
    }

    let mut out = Vec::with_capacity(header_len + rows.len() * record_len + 1);
    // fixed modification date (1970-01-01) keeps output reproducible
    out.extend_from_slice(&[0x03, 70, 1, 1]);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(&(record_len as u16).to_le_bytes());
    out.extend_from_slice(&[0; 20]);
    for f in &fields {
        let mut name = [0u8; 11];
        name[..f.name.len()].copy_from_slice(f.name.as_bytes());
        out.extend_from_slice(&name);
        out.push(f.field_type);
        out.extend_from_slice(&[0; 4]);
        out.push(f.length as u8);
        out.push(f.decimals);
        out.extend_from_slice(&[0; 14]);
    }
    out.push(HEADER_TERMINATOR);
    for r in rows {
        out.push(b' ');
        for (f, v) in fields.iter().zip(r.values()) {
            let text = render(v);
            let pad = " ".repeat(f.length - text.len());
            if f.field_type == b'N' {
                out.extend_from_slice(pad.as_bytes());
                out.extend_from_slice(text.as_bytes());
            } else {
                out.extend_from_slice(text.as_bytes());
                out.extend_from_slice(pad.as_bytes());
            }
        }
    }
    out.push(FILE_TERMINATOR);
    Ok(out)
}
