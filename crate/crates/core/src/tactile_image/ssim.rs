//! Windowed structural similarity.
//!
//! Window statistics come from summed-area tables over exact integer sums, so
//! the per-window terms for identical inputs are bit-identical and
//! `ssim(x, x)` evaluates to exactly 1.

use serde::{Deserialize, Serialize};

use super::GrayFrame;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Side of the square window, odd and at least 3.
    pub window_n: usize,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of pixel values.
    pub dynamic_range_l: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_n: 7,
            k1: 0.01,
            k2: 0.03,
            dynamic_range_l: 255.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_n < 3 || self.window_n % 2 == 0 {
            return Err(invalid(format!("ssim window must be odd and >= 3, got {}", self.window_n)));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(invalid("ssim constants k1, k2 must be positive"));
        }
        if !(self.dynamic_range_l > 0.0) {
            return Err(invalid("ssim dynamic range must be positive"));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range_l).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range_l).powi(2)
    }
}

/// Summed-area tables of `u`, `v`, `u^2`, `v^2` and `uv`, interleaved per
/// cell, with a zero border row and column.
struct Integrals {
    stride: usize,
    sums: Vec<[u64; 5]>,
}

impl Integrals {
    fn build(u: &[u8], v: &[u8], width: usize, height: usize) -> Self {
        let stride = width + 1;
        let mut sums = vec![[0u64; 5]; stride * (height + 1)];
        for y in 0..height {
            let mut row = [0u64; 5];
            let (above, here) = sums.split_at_mut((y + 1) * stride);
            let above = &above[y * stride..];
            for x in 0..width {
                let (a, b) = (u[y * width + x] as u64, v[y * width + x] as u64);
                row[0] += a;
                row[1] += b;
                row[2] += a * a;
                row[3] += b * b;
                row[4] += a * b;
                let up = above[x + 1];
                here[x + 1] = [
                    up[0] + row[0],
                    up[1] + row[1],
                    up[2] + row[2],
                    up[3] + row[3],
                    up[4] + row[4],
                ];
            }
        }
        Self { stride, sums }
    }

    #[inline]
    fn window(&self, x: usize, y: usize, n: usize) -> [i64; 5] {
        let s = self.stride;
        let a = self.sums[y * s + x];
        let b = self.sums[y * s + x + n];
        let c = self.sums[(y + n) * s + x];
        let d = self.sums[(y + n) * s + x + n];
        std::array::from_fn(|k| (d[k] + a[k] - b[k] - c[k]) as i64)
    }
}

/// SSIM map over all fully contained windows (stride 1), row-major with
/// dimensions `(width - n + 1, height - n + 1)`.
pub fn ssim_map(u: &GrayFrame, v: &GrayFrame, p: &SsimParams) -> Result<(usize, usize, Vec<f64>)> {
    p.validate()?;
    u.ensure_same_dims(v)?;
    let (w, h) = u.dims();
    let n = p.window_n;
    if w < n || h < n {
        return Err(invalid(format!("frame {w}x{h} is smaller than the {n}x{n} ssim window")));
    }
    let table = Integrals::build(u.data(), v.data(), w, h);

    let count = (n * n) as i64;
    let inv_norm = 1.0 / (count * count) as f64;
    let (c1, c2) = (p.c1(), p.c2());
    let (mw, mh) = (w - n + 1, h - n + 1);
    let mut map = Vec::with_capacity(mw * mh);
    for y in 0..mh {
        for x in 0..mw {
            let [a, b, aa, bb, ab] = table.window(x, y, n);
            // Scaled by count^2: mean products and (population) covariances.
            let mean_uv = (a * b) as f64 * inv_norm;
            let mean_sq = (a * a + b * b) as f64 * inv_norm;
            let cov_uv = (count * ab - a * b) as f64 * inv_norm;
            let var_sum = (count * aa - a * a + count * bb - b * b) as f64 * inv_norm;
            let num = (2.0 * mean_uv + c1) * (2.0 * cov_uv + c2);
            let den = (mean_sq + c1) * (var_sum + c2);
            map.push(num / den);
        }
    }
    Ok((mw, mh, map))
}

/// Mean SSIM over all stride-1 windows.
pub fn ssim(u: &GrayFrame, v: &GrayFrame, p: &SsimParams) -> Result<f64> {
    let (_, _, map) = ssim_map(u, v, p)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}
