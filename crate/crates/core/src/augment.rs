//! Seeded geometric augmentation of an image together with its instance masks.
//!
//! Rotation keeps the canvas size, samples imagery bilinearly and masks by
//! nearest neighbour, and leaves uncovered corners black / unset. Every
//! variant draws from its own ChaCha stream keyed by (image, variant), so the
//! output does not depend on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{rle_decode, rle_encode, BBox};
use crate::dataset::{Dataset, DatasetImage, ImageAnnotations, Instance};
use crate::error::{Error, Result};
use crate::parcel_extract::BitMask;
use crate::raster_io::RgbImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Closed interval of rotation angles in degrees (positive = counter-clockwise).
    pub rotation_range_deg: [f64; 2],
    /// Flip each variant vertically with probability 0.5.
    pub vertical_flip: bool,
    pub per_image_outputs: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            rotation_range_deg: [-50.0, 50.0],
            vertical_flip: true,
            per_image_outputs: 2,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.rotation_range_deg;
        if !(lo.is_finite() && hi.is_finite()) || lo.abs() > 180.0 || hi.abs() > 180.0 || lo > hi {
            return Err(Error::Config(format!(
                "rotation range [{lo}, {hi}] must be ordered, finite and within ±180°"
            )));
        }
        Ok(())
    }
}

/// Draws for one variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantPlan {
    pub image_index: usize,
    pub variant: usize,
    pub angle_deg: f64,
    pub flipped: bool,
}

pub fn plan_variant(cfg: &AugmentConfig, image_index: usize, variant: usize) -> VariantPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((image_index as u64) << 32) | variant as u64);
    let [lo, hi] = cfg.rotation_range_deg;
    let angle_deg = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let flipped = cfg.vertical_flip && rng.random_bool(0.5);
    VariantPlan {
        image_index,
        variant,
        angle_deg,
        flipped,
    }
}

/// `(cos, sin)` with exact values on quarter turns.
fn cos_sin(theta_deg: f64) -> (f64, f64) {
    let t = theta_deg.rem_euclid(360.0);
    match t {
        0.0 => (1.0, 0.0),
        90.0 => (0.0, 1.0),
        180.0 => (-1.0, 0.0),
        270.0 => (0.0, -1.0),
        _ => {
            let r = t.to_radians();
            (r.cos(), r.sin())
        }
    }
}

fn check_dims(image: &RgbImage, masks: &[BitMask]) -> Result<()> {
    match masks.iter().find(|m| (m.width(), m.height()) != (image.width, image.height)) {
        Some(m) => Err(Error::DimensionMismatch(format!(
            "mask {}x{} on a {}x{} image",
            m.width(),
            m.height(),
            image.width,
            image.height
        ))),
        None => Ok(()),
    }
}

/// Rotate about the image centre by `theta_deg` (counter-clockwise as displayed).
pub fn rotate(image: &RgbImage, masks: &[BitMask], theta_deg: f64) -> Result<(RgbImage, Vec<BitMask>)> {
    check_dims(image, masks)?;
    let (w, h) = (image.width, image.height);
    let (cos, sin) = cos_sin(theta_deg);
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    const EDGE: f64 = 1e-9;

    let mut out = RgbImage::new(w, h);
    let mut out_masks: Vec<BitMask> = masks.iter().map(|_| BitMask::new(w, h)).collect();
    for row in 0..h {
        for col in 0..w {
            let dx = col as f64 + 0.5 - cx;
            let dy = row as f64 + 0.5 - cy;
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            if sx < -EDGE || sy < -EDGE || sx > w as f64 + EDGE || sy > h as f64 + EDGE {
                continue;
            }

            let u = (sx - 0.5).clamp(0.0, (w - 1) as f64);
            let v = (sy - 0.5).clamp(0.0, (h - 1) as f64);
            let (u0, v0) = (u.floor() as usize, v.floor() as usize);
            let (u1, v1) = ((u0 + 1).min(w - 1), (v0 + 1).min(h - 1));
            let (fu, fv) = (u - u0 as f64, v - v0 as f64);
            let (p00, p10, p01, p11) = (image.get(u0, v0), image.get(u1, v0), image.get(u0, v1), image.get(u1, v1));
            let mut rgb = [0u8; 3];
            for (ch, out_ch) in rgb.iter_mut().enumerate() {
                let val = (1.0 - fu) * (1.0 - fv) * p00[ch] as f64
                    + fu * (1.0 - fv) * p10[ch] as f64
                    + (1.0 - fu) * fv * p01[ch] as f64
                    + fu * fv * p11[ch] as f64;
                *out_ch = val.round().clamp(0.0, 255.0) as u8;
            }
            out.put(col, row, rgb);

            let (nc, nr) = (sx.floor(), sy.floor());
            if nc >= 0.0 && nr >= 0.0 && (nc as usize) < w && (nr as usize) < h {
                for (src, dst) in masks.iter().zip(out_masks.iter_mut()) {
                    if src.get(nc as usize, nr as usize) {
                        dst.set(col, row, true);
                    }
                }
            }
        }
    }
    Ok((out, out_masks))
}

/// Reverse row order (top <-> bottom).
pub fn flip_vertical(image: &RgbImage, masks: &[BitMask]) -> Result<(RgbImage, Vec<BitMask>)> {
    check_dims(image, masks)?;
    let (w, h) = (image.width, image.height);
    let mut out = RgbImage::new(w, h);
    for row in 0..h {
        let src = (h - 1 - row) * w * 3;
        out.data[row * w * 3..(row + 1) * w * 3].copy_from_slice(&image.data[src..src + w * 3]);
    }
    let out_masks = masks
        .iter()
        .map(|m| {
            let mut f = BitMask::new(w, h);
            for row in 0..h {
                for col in 0..w {
                    f.set(col, row, m.get(col, h - 1 - row));
                }
            }
            f
        })
        .collect();
    Ok((out, out_masks))
}

fn make_variant(src: &DatasetImage, plan: &VariantPlan) -> Result<DatasetImage> {
    let a = &src.annotations;
    let masks = a.instances.iter().map(|i| rle_decode(&i.rle)).collect::<Result<Vec<_>>>()?;
    let (mut image, mut masks) = rotate(&src.image, &masks, plan.angle_deg)?;
    if plan.flipped {
        (image, masks) = flip_vertical(&image, &masks)?;
    }
    let name = format!("{}_aug{}", a.name, plan.variant);
    let mut instances = Vec::with_capacity(masks.len());
    for (inst, mask) in a.instances.iter().zip(&masks) {
        match mask.bounds() {
            Some(b) => instances.push(Instance {
                instance_id: inst.instance_id,
                label: inst.label,
                bbox: BBox::from_pixel_bounds(b),
                rle: rle_encode(mask),
            }),
            None => log::info!("{name}: instance {} rotated out of frame; dropped", inst.instance_id),
        }
    }
    Ok(DatasetImage {
        annotations: ImageAnnotations {
            name,
            width: a.width,
            height: a.height,
            instances,
        },
        image,
    })
}

/// Originals followed by `per_image_outputs` seeded variants of each, in
/// source order. Variant boxes are recomputed from the transformed masks.
pub fn expand_dataset(dataset: &Dataset, cfg: &AugmentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let groups = dataset
        .images
        .par_iter()
        .enumerate()
        .map(|(i, src)| {
            let mut group = Vec::with_capacity(cfg.per_image_outputs + 1);
            group.push(src.clone());
            for k in 0..cfg.per_image_outputs {
                group.push(make_variant(src, &plan_variant(cfg, i, k))?);
            }
            Ok(group)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        images: groups.into_iter().flatten().collect(),
    })
}
