//! Column-major run-length masks in the COCO layout: runs alternate
//! zeros/ones and always start with a (possibly empty) run of zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parcel_extract::BitMask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RleJson", into = "RleJson")]
pub struct RleMask {
    width: usize,
    height: usize,
    counts: Vec<u32>,
}

/// Interchange form: `{"size": [h, w], "counts": [...]}`.
#[derive(Serialize, Deserialize)]
struct RleJson {
    size: [usize; 2],
    counts: Vec<u32>,
}

impl TryFrom<RleJson> for RleMask {
    type Error = Error;

    fn try_from(j: RleJson) -> Result<Self> {
        RleMask::new(j.size[1], j.size[0], j.counts)
    }
}

impl From<RleMask> for RleJson {
    fn from(m: RleMask) -> Self {
        RleJson {
            size: [m.height, m.width],
            counts: m.counts,
        }
    }
}

impl RleMask {
    pub fn new(width: usize, height: usize, counts: Vec<u32>) -> Result<Self> {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total != (width * height) as u64 {
            return Err(Error::Consistency(format!(
                "RLE counts sum to {total}, expected {width}x{height} = {}",
                width * height
            )));
        }
        if counts.iter().skip(1).any(|&c| c == 0) {
            return Err(Error::Consistency("only the first RLE count may be zero".into()));
        }
        Ok(Self { width, height, counts })
    }

    /// All-zero mask.
    pub fn empty(width: usize, height: usize) -> Self {
        let counts = if width * height == 0 { vec![] } else { vec![(width * height) as u32] };
        Self { width, height, counts }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `(start, len)` of each run of ones, in column-major positions.
    pub fn ones_runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += c as u64;
            (i % 2 == 1).then_some((start, c as u64))
        })
    }

    pub fn area(&self) -> u64 {
        mask_area(self)
    }

    /// Number of pixels set in both masks.
    pub fn intersection_area(&self, other: &RleMask) -> Result<u64> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let a: Vec<_> = self.ones_runs().collect();
        let b: Vec<_> = other.ones_runs().collect();
        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let (a0, a1) = (a[i].0, a[i].0 + a[i].1);
            let (b0, b1) = (b[j].0, b[j].0 + b[j].1);
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// Pixel extent of the set pixels as `[min_col, min_row, max_col + 1, max_row + 1]`.
    pub fn bounds(&self) -> Option<[usize; 4]> {
        let h = self.height as u64;
        let mut b: Option<[u64; 4]> = None;
        for (start, len) in self.ones_runs() {
            let end = start + len - 1;
            let (c0, c1) = (start / h, end / h);
            let (r0, r1) = if c0 == c1 { (start % h, end % h) } else { (0, h - 1) };
            let e = b.get_or_insert([c0, r0, c1 + 1, r1 + 1]);
            e[0] = e[0].min(c0);
            e[1] = e[1].min(r0);
            e[2] = e[2].max(c1 + 1);
            e[3] = e[3].max(r1 + 1);
        }
        b.map(|v| v.map(|x| x as usize))
    }
}

pub fn rle_encode(m: &BitMask) -> RleMask {
    let (w, h) = (m.width(), m.height());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for col in 0..w {
        for row in 0..h {
            let bit = m.get(col, row);
            if bit != current {
                counts.push(run);
                run = 0;
                current = bit;
            }
            run += 1;
        }
    }
    if w * h > 0 {
        counts.push(run);
    }
    RleMask {
        width: w,
        height: h,
        counts,
    }
}

pub fn rle_decode(r: &RleMask) -> Result<BitMask> {
    let total: u64 = r.counts.iter().map(|&c| c as u64).sum();
    if total != (r.width * r.height) as u64 {
        return Err(Error::Consistency(format!(
            "RLE counts sum to {total}, expected {}",
            r.width * r.height
        )));
    }
    let mut m = BitMask::new(r.width, r.height);
    for (start, len) in r.ones_runs() {
        for p in start..start + len {
            let p = p as usize;
            m.set(p / r.height, p % r.height, true);
        }
    }
    Ok(m)
}

/// Number of set pixels (sum of the runs of ones).
pub fn mask_area(r: &RleMask) -> u64 {
    r.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, bits: &[u8]) -> BitMask {
        BitMask::from_bits(w, h, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn all_zero_and_all_one() {
        assert_eq!(rle_encode(&BitMask::new(3, 3)).counts(), &[9]);
        assert_eq!(rle_encode(&mask(2, 2, &[1, 1, 1, 1])).counts(), &[0, 4]);
    }

    #[test]
    fn column_major_order() {
        // row-major [[0,1],[0,1]] -> columns: (0,0), (1,1)
        assert_eq!(rle_encode(&mask(2, 2, &[0, 1, 0, 1])).counts(), &[2, 2]);
        // row-major [[1,0],[0,0]] -> columns: (1,0), (0,0)
        assert_eq!(rle_encode(&mask(2, 2, &[1, 0, 0, 0])).counts(), &[0, 1, 3]);
    }

    #[test]
    fn area_of_runs() {
        let r = RleMask::new(3, 3, vec![3, 5, 1]).unwrap();
        assert_eq!(mask_area(&r), 5);
        assert_eq!(rle_decode(&r).unwrap().count_ones(), 5);
        assert_eq!(mask_area(&RleMask::new(2, 2, vec![0, 4]).unwrap()), 4);
        assert_eq!(mask_area(&RleMask::empty(4, 4)), 0);
    }

    #[test]
    fn bad_counts_are_rejected() {
        assert!(matches!(RleMask::new(3, 3, vec![1, 2]), Err(Error::Consistency(_))));
        assert!(matches!(RleMask::new(2, 2, vec![1, 0, 3]), Err(Error::Consistency(_))));
        let bad = RleMask {
            width: 2,
            height: 2,
            counts: vec![1],
        };
        assert!(matches!(rle_decode(&bad), Err(Error::Consistency(_))));
    }

    #[test]
    fn json_layout() {
        let r = RleMask::new(3, 2, vec![1, 2, 3]).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"size":[2,3],"counts":[1,2,3]}"#);
        assert_eq!(serde_json::from_str::<RleMask>(&text).unwrap(), r);
        assert!(serde_json::from_str::<RleMask>(r#"{"size":[2,3],"counts":[1]}"#).is_err());
    }

    fn arb_mask() -> impl Strategy<Value = BitMask> {
        (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| BitMask::from_bits(w, h, bits).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn decode_inverts_encode(m in arb_mask()) {
            let r = rle_encode(&m);
            prop_assert_eq!(mask_area(&r), m.count_ones() as u64);
            prop_assert_eq!(r.bounds(), m.bounds());
            prop_assert_eq!(rle_decode(&r).unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn intersection_matches_dense_count((a, b) in (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            let one = proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| BitMask::from_bits(w, h, bits).unwrap());
            (one.clone(), one)
        })) {
            let dense = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x && **y).count() as u64;
            prop_assert_eq!(rle_encode(&a).intersection_area(&rle_encode(&b)).unwrap(), dense);
        }
    }
}
