//! Per-frame, per-sensor augmentation: crop, zoom, brightness/contrast, noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng_for;
use crate::tactile_image::GrayFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Largest fraction of the width removed by the random crop.
    pub crop_frac_w: f64,
    pub crop_frac_h: f64,
    pub zoom_max: f64,
    /// On intensities scaled to [0, 1].
    pub noise_variance: f64,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            crop_frac_w: 0.06,
            crop_frac_h: 0.02,
            zoom_max: 0.02,
            noise_variance: 1e-4,
            alpha_range: (0.3, 1.0),
            beta_range: (-50.0, 50.0),
        }
    }
}

impl AugmentConfig {
    pub fn identity() -> Self {
        Self {
            crop_frac_w: 0.0,
            crop_frac_h: 0.0,
            zoom_max: 0.0,
            noise_variance: 0.0,
            alpha_range: (1.0, 1.0),
            beta_range: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("crop_frac_w", self.crop_frac_w), ("crop_frac_h", self.crop_frac_h), ("zoom_max", self.zoom_max)] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        if !(self.noise_variance >= 0.0) {
            return Err(invalid("noise variance must be non-negative"));
        }
        let (a0, a1) = self.alpha_range;
        let (b0, b1) = self.beta_range;
        if !(a0 <= a1 && a0 >= 0.0) || !(b0 <= b1) {
            return Err(invalid("alpha/beta ranges must be ordered, alpha non-negative"));
        }
        Ok(())
    }
}

fn bilinear(src: &[u8], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |xx: usize, yy: usize| src[yy * w + xx] as f64;
    let top = p(x0, y0) + fx * (p(x1, y0) - p(x0, y0));
    let bot = p(x0, y1) + fx * (p(x1, y1) - p(x0, y1));
    top + fy * (bot - top)
}

/// Augments one `w x h` block into `out` (intensity units, not rounded).
pub fn augment_block(src: &[u8], w: usize, h: usize, cfg: &AugmentConfig, rng: &mut impl Rng, out: &mut [f32]) {
    debug_assert_eq!(src.len(), w * h);
    let fw = rng.random_range(0.0..=cfg.crop_frac_w);
    let fh = rng.random_range(0.0..=cfg.crop_frac_h);
    let mut sw = w as f64 * (1.0 - fw);
    let mut sh = h as f64 * (1.0 - fh);
    let mut x0 = rng.random_range(0.0..=w as f64 * fw);
    let mut y0 = rng.random_range(0.0..=h as f64 * fh);
    let zoom = rng.random_range(1.0..=1.0 + cfg.zoom_max);
    if zoom > 1.0 {
        let (nw, nh) = (sw / zoom, sh / zoom);
        x0 += (sw - nw) / 2.0;
        y0 += (sh - nh) / 2.0;
        sw = nw;
        sh = nh;
    }
    let alpha = rng.random_range(cfg.alpha_range.0..=cfg.alpha_range.1);
    let beta = rng.random_range(cfg.beta_range.0..=cfg.beta_range.1);
    let sigma = cfg.noise_variance.sqrt() * 255.0;
    let identity_geometry = sw == w as f64 && sh == h as f64 && x0 == 0.0 && y0 == 0.0;
    let (kx, ky) = (sw / w as f64, sh / h as f64);
    for j in 0..h {
        for i in 0..w {
            let v = if identity_geometry {
                src[j * w + i] as f64
            } else {
                bilinear(src, w, h, x0 + (i as f64 + 0.5) * kx - 0.5, y0 + (j as f64 + 0.5) * ky - 0.5)
            };
            let mut v = (alpha * v + beta).clamp(0.0, 255.0);
            if sigma > 0.0 {
                let n: f64 = rng.sample(StandardNormal);
                v = (v + sigma * n).clamp(0.0, 255.0);
            }
            out[j * w + i] = v as f32;
        }
    }
}

/// Crop (resized back), zoom, `clip(alpha * p + beta)`, then Gaussian noise.
pub fn augment(frame: &GrayFrame, cfg: &AugmentConfig, seed: u64) -> Result<GrayFrame> {
    cfg.validate()?;
    let (w, h) = frame.dims();
    let mut out = vec![0.0f32; w * h];
    augment_block(frame.data(), w, h, cfg, &mut rng_for(seed, &[]), &mut out);
    GrayFrame::new(w, h, out.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect())
}

/// Augments every sensor block of every frame of a `[t, h, w]` sequence
/// independently and scales to [0, 1]. `w` must be a multiple of `block_w`.
pub fn augment_sequence(
    seq: &[u8],
    dims: (usize, usize, usize),
    block_w: usize,
    cfg: &AugmentConfig,
    seed: u64,
    out: &mut [f32],
) -> Result<()> {
    let (t, h, w) = dims;
    if seq.len() != t * h * w || out.len() != seq.len() || block_w == 0 || w % block_w != 0 {
        return Err(invalid("sequence buffer does not match its dimensions"));
    }
    let mut rng = rng_for(seed, &[]);
    let mut src = vec![0u8; block_w * h];
    let mut dst = vec![0.0f32; block_w * h];
    for f in 0..t {
        let frame = &seq[f * h * w..(f + 1) * h * w];
        for b in 0..w / block_w {
            for y in 0..h {
                src[y * block_w..(y + 1) * block_w].copy_from_slice(&frame[y * w + b * block_w..y * w + (b + 1) * block_w]);
            }
            augment_block(&src, block_w, h, cfg, &mut rng, &mut dst);
            for y in 0..h {
                let o = f * h * w + y * w + b * block_w;
                for x in 0..block_w {
                    out[o + x] = dst[y * block_w + x] / 255.0;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pattern() -> GrayFrame {
        GrayFrame::from_fn(40, 60, |x, y| ((x * 13 + y * 7) % 256) as u8)
    }

    #[test]
    fn identity_config_is_identity() {
        let f = pattern();
        assert_eq!(augment(&f, &AugmentConfig::identity(), 5).unwrap(), f);
    }

    #[test]
    fn seeded_and_varied() {
        let f = pattern();
        let cfg = AugmentConfig::default();
        assert_eq!(augment(&f, &cfg, 1).unwrap(), augment(&f, &cfg, 1).unwrap());
        assert_ne!(augment(&f, &cfg, 1).unwrap(), augment(&f, &cfg, 2).unwrap());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = AugmentConfig { crop_frac_w: 1.5, ..Default::default() };
        assert!(augment(&pattern(), &cfg, 0).is_err());
    }

    #[test]
    fn sequence_blocks_get_independent_draws() {
        let block: Vec<u8> = pattern().into_data();
        let mut seq = Vec::new();
        for y in 0..60 {
            for _ in 0..2 {
                seq.extend_from_slice(&block[y * 40..(y + 1) * 40]);
            }
        }
        let mut out = vec![0.0; seq.len()];
        augment_sequence(&seq, (1, 60, 80), 40, &AugmentConfig::default(), 3, &mut out).unwrap();
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        let left: Vec<f32> = (0..60).flat_map(|y| out[y * 80..y * 80 + 40].to_vec()).collect();
        let right: Vec<f32> = (0..60).flat_map(|y| out[y * 80 + 40..y * 80 + 80].to_vec()).collect();
        assert_ne!(left, right);
    }

    proptest! {
        #[test]
        fn output_within_range(seed in any::<u64>(), a0 in 0.0f64..2.0, da in 0.0f64..2.0, b in -300.0f64..300.0) {
            let cfg = AugmentConfig { alpha_range: (a0, a0 + da), beta_range: (b.min(0.0), b.max(0.0)), noise_variance: 0.01, ..Default::default() };
            let mut out = vec![0.0f32; 40 * 60];
            augment_block(pattern().data(), 40, 60, &cfg, &mut rng_for(seed, &[]), &mut out);
            prop_assert!(out.iter().all(|v| (0.0..=255.0).contains(v)));
        }
    }
}
