//! Even-odd scanline fill sampled at pixel centres.
//!
//! Rings are given in the pixel coordinates of some base grid. A pixel is set
//! iff a horizontal ray from its centre crosses the ring edges an odd number
//! of times, with edges treated half-open in y so shared vertices count once.

use super::BitMask;

pub(crate) type PixelPoint = (f64, f64);

/// Fill the window `[col0, col0 + width) x [row0, row0 + height)` of the base grid.
pub(crate) fn fill_rings(rings: &[Vec<PixelPoint>], col0: i64, row0: i64, width: usize, height: usize) -> BitMask {
    let mut mask = BitMask::new(width, height);
    if width == 0 || height == 0 {
        return mask;
    }
    let centre_y = |r: usize| (row0 + r as i64) as f64 + 0.5;
    let centre_x = |c: usize| (col0 + c as i64) as f64 + 0.5;

    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); height];
    for ring in rings {
        for edge in ring.windows(2) {
            let (a, b) = (edge[0], edge[1]);
            if a.1 == b.1 || !(a.1.is_finite() && b.1.is_finite()) {
                continue;
            }
            let (lo, hi) = if a.1 < b.1 { (a.1, b.1) } else { (b.1, a.1) };
            // candidate rows from the span, then confirm with the exact test
            let first = ((lo - row0 as f64 - 0.5).ceil() as i64 - 1).max(0);
            let last = ((hi - row0 as f64 - 0.5).ceil() as i64 + 1).min(height as i64);
            for r in first..last {
                let r = r as usize;
                let py = centre_y(r);
                if (a.1 > py) != (b.1 > py) {
                    crossings[r].push((b.0 - a.0) * (py - a.1) / (b.1 - a.1) + a.0);
                }
            }
        }
    }

    for (r, xs) in crossings.iter_mut().enumerate() {
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            let (enter, exit) = (span[0], span[1]);
            // columns whose centre lies in [enter, exit)
            let mut c = ((enter - col0 as f64 - 0.5).ceil().max(0.0) as usize).min(width);
            while c > 0 && centre_x(c - 1) >= enter {
                c -= 1;
            }
            while c < width && centre_x(c) < enter {
                c += 1;
            }
            while c < width && centre_x(c) < exit {
                mask.set(c, r, true);
                c += 1;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Crossing-number test at every pixel centre.
    fn oracle(rings: &[Vec<PixelPoint>], w: usize, h: usize) -> BitMask {
        let mut m = BitMask::new(w, h);
        for r in 0..h {
            for c in 0..w {
                let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
                let mut inside = false;
                for ring in rings {
                    for e in ring.windows(2) {
                        let (a, b) = (e[0], e[1]);
                        if (a.1 > py) != (b.1 > py) && px < (b.0 - a.0) * (py - a.1) / (b.1 - a.1) + a.0 {
                            inside = !inside;
                        }
                    }
                }
                m.set(c, r, inside);
            }
        }
        m
    }

    #[test]
    fn two_by_two_square() {
        let ring = vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (0.0, 0.0)];
        let m = fill_rings(&[ring], 0, 0, 5, 5);
        assert_eq!(m.count_ones(), 4);
        assert!(m.get(0, 0) && m.get(1, 1) && !m.get(2, 2));
    }

    #[test]
    fn window_offset_matches_full_grid() {
        let ring = vec![(1.3, 0.7), (7.9, 2.2), (5.1, 8.6), (0.4, 6.0), (1.3, 0.7)];
        let full = fill_rings(std::slice::from_ref(&ring), 0, 0, 10, 10);
        let win = fill_rings(&[ring], 2, 3, 5, 4);
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(win.get(c, r), full.get(c + 2, r + 3));
            }
        }
    }

    #[test]
    fn random_polygons_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(3..9);
            let mut ring: Vec<PixelPoint> = (0..n)
                .map(|_| (rng.random_range(-4.0..36.0), rng.random_range(-4.0..36.0)))
                .collect();
            ring.push(ring[0]);
            let (w, h) = (rng.random_range(1..33), rng.random_range(1..33));
            let rings = vec![ring];
            assert_eq!(fill_rings(&rings, 0, 0, w, h), oracle(&rings, w, h));
        }
    }
}
