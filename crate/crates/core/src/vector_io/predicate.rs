use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{AttrValue, ParcelFeature};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Contains,
    Lt,
    Gt,
}

/// `FIELD OP VALUE`, e.g. `APN = "002"`, `USE contains PARK`, `AREA > 5000`.
///
/// Operators: `=` (or `==`), `!=` (or `<>`, `≠`), `contains`, `<`, `>`.
/// Equality compares numerically when both sides are numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub field: String,
    pub op: CompareOp,
    pub value: String,
}

impl Predicate {
    pub fn new(field: impl Into<String>, op: CompareOp, value: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            op,
            value: value.into(),
        }
    }

    pub fn matches(&self, attributes: &IndexMap<String, AttrValue>) -> Result<bool> {
        let attr = attributes.get(&self.field).ok_or_else(|| Error::Field {
            field: self.field.clone(),
            available: attributes.keys().cloned().collect(),
        })?;
        let wanted = self.value.parse::<f64>().ok();
        let equal = || match (attr.as_f64(), wanted) {
            (Some(a), Some(b)) if matches!(attr, AttrValue::Number(_)) => a == b,
            _ => attr.to_string() == self.value,
        };
        Ok(match self.op {
            CompareOp::Eq => equal(),
            CompareOp::Ne => !equal(),
            CompareOp::Contains => attr.to_string().contains(&self.value),
            CompareOp::Lt => matches!((attr.as_f64(), wanted), (Some(a), Some(b)) if a < b),
            CompareOp::Gt => matches!((attr.as_f64(), wanted), (Some(a), Some(b)) if a > b),
        })
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse predicate {s:?}; expected FIELD OP VALUE"));
        let s = s.trim();
        let field_end = s
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(s.len());
        if field_end == 0 {
            return Err(bad());
        }
        let (field, rest) = s.split_at(field_end);
        let rest = rest.trim_start();
        let ops: [(&str, CompareOp); 8] = [
            ("==", CompareOp::Eq),
            ("!=", CompareOp::Ne),
            ("<>", CompareOp::Ne),
            ("≠", CompareOp::Ne),
            ("contains ", CompareOp::Contains),
            ("=", CompareOp::Eq),
            ("<", CompareOp::Lt),
            (">", CompareOp::Gt),
        ];
        let (token, op) = ops
            .iter()
            .find(|(token, _)| rest.starts_with(token))
            .ok_or_else(bad)?;
        let value = rest[token.len()..].trim();
        let unquoted = ['"', '\'']
            .iter()
            .find_map(|&q| value.strip_prefix(q).and_then(|v| v.strip_suffix(q)))
            .unwrap_or(value);
        Ok(Self::new(field, *op, unquoted))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Contains => "contains",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        };
        write!(f, "{} {op} {:?}", self.field, self.value)
    }
}

/// Order-preserving subset of `features` satisfying `predicate`.
pub fn filter_features(features: &[ParcelFeature], predicate: &Predicate) -> Result<Vec<ParcelFeature>> {
    let mut kept = Vec::new();
    for f in features {
        if predicate.matches(&f.attributes)? {
            kept.push(f.clone());
        }
    }
    Ok(kept)
}
