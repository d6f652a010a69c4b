//! Camera view of the pin array.
//!
//! The sensor's long axis maps to image rows: a point `(x, y)` mm lands at
//! pixel `(cx + s*y, cy + s*x)` with `s = px_per_mm`.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::contact::DeformationField;
use super::layout::{rest_pin_positions, PinLayout};
use crate::error::{invalid, Result};
use crate::seed::derive_seed;
use crate::tactile_image::GrayFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    pub px_per_mm: f64,
    /// Intensity outside the sensor window.
    pub outside_level: f64,
    /// Skin intensity at the window edge; the centre line is brighter by `led_boost`.
    pub skin_level: f64,
    pub led_boost: f64,
    pub pin_peak: f64,
    /// Pin blob sigma as a fraction of the projected pin radius.
    pub pin_sigma_frac: f64,
    /// Skin brightening per mm of contact pressure.
    pub halo_per_mm: f64,
    pub halo_sigma_px: f64,
    pub glare_center: (f64, f64),
    pub glare_radius: f64,
    pub glare_level: u8,
    pub noise_sigma: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            px_per_mm: 6.0,
            outside_level: 6.0,
            skin_level: 30.0,
            led_boost: 10.0,
            pin_peak: 190.0,
            pin_sigma_frac: 0.6,
            halo_per_mm: 10.0,
            halo_sigma_px: 12.0,
            glare_center: (108.0, 32.0),
            glare_radius: 9.0,
            glare_level: 235,
            noise_sigma: 0.5,
        }
    }
}

impl RenderParams {
    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Sensor-plane millimetres to pixel coordinates.
    pub fn project(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (cx, cy) = self.center();
        (cx + self.px_per_mm * y, cy + self.px_per_mm * x)
    }
}

/// Adds `amp * exp(-r^2 / 2 sigma^2)` around `(cx, cy)`, truncated at 3.5 sigma.
/// The kernel is separable, so only two 1-D tables are evaluated.
fn splat(buf: &mut [f32], w: usize, h: usize, (cx, cy): (f64, f64), sigma: f64, amp: f64) {
    if amp == 0.0 {
        return;
    }
    let reach = (3.5 * sigma).ceil();
    let x0 = (cx - reach).floor().max(0.0) as usize;
    let x1 = ((cx + reach).ceil() as i64).min(w as i64 - 1);
    let y0 = (cy - reach).floor().max(0.0) as usize;
    let y1 = ((cy + reach).ceil() as i64).min(h as i64 - 1);
    if x1 < x0 as i64 || y1 < y0 as i64 {
        return;
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let ex: Vec<f32> = (x0..=x1 as usize)
        .map(|x| (-(x as f64 - cx).powi(2) * inv).exp() as f32)
        .collect();
    for y in y0..=y1 as usize {
        let ey = (amp * (-(y as f64 - cy).powi(2) * inv).exp()) as f32;
        let row = &mut buf[y * w + x0..=y * w + x1 as usize];
        for (px, &e) in row.iter_mut().zip(&ex) {
            *px += ey * e;
        }
    }
}

/// Renders frames for one layout and parameter set. The static background
/// (window, LED shading, glare) is computed once.
#[derive(Debug, Clone)]
pub struct Renderer {
    layout: PinLayout,
    params: RenderParams,
    rest: Vec<(f64, f64)>,
    background: Vec<f32>,
    glare_pixels: Vec<usize>,
}

impl Renderer {
    pub fn new(layout: &PinLayout, params: &RenderParams) -> Result<Self> {
        layout.validate()?;
        if params.width == 0 || params.height == 0 {
            return Err(invalid("render size must be positive"));
        }
        let p = params;
        let (w, h) = (p.width, p.height);
        let (cx, cy) = p.center();
        let half_w = layout.surface.1 / 2.0 * p.px_per_mm;
        let half_h = layout.surface.0 / 2.0 * p.px_per_mm;
        let mut background = vec![p.outside_level as f32; w * h];
        let mut glare_pixels = Vec::new();
        let (gx, gy) = p.glare_center;
        for y in 0..h {
            let inside_rows = (y as f64 + 0.5 - cy).abs() <= half_h;
            for x in 0..w {
                let u = (x as f64 + 0.5 - cx) / half_w;
                if inside_rows && u.abs() <= 1.0 {
                    background[y * w + x] = (p.skin_level + p.led_boost * (1.0 - u * u)) as f32;
                }
                if (x as f64 - gx).powi(2) + (y as f64 - gy).powi(2) <= p.glare_radius * p.glare_radius {
                    glare_pixels.push(y * w + x);
                }
            }
        }
        Ok(Self {
            layout: *layout,
            params: *params,
            rest: rest_pin_positions(layout),
            background,
            glare_pixels,
        })
    }

    pub fn params(&self) -> &RenderParams {
        &self.params
    }

    pub fn layout(&self) -> &PinLayout {
        &self.layout
    }

    pub fn render(&self, field: &DeformationField, glare: bool, noise_seed: Option<u64>) -> Result<GrayFrame> {
        let pins = self.layout.pin_count();
        if field.displacements.len() != pins || field.gains.len() != pins {
            return Err(invalid(format!(
                "deformation field has {} pins, layout has {pins}",
                field.displacements.len()
            )));
        }
        let p = &self.params;
        let (w, h) = (p.width, p.height);
        let mut buf = self.background.clone();
        for (i, &pin) in self.rest.iter().enumerate() {
            let gain = field.gains[i];
            if gain > 0.0 {
                splat(&mut buf, w, h, p.project(pin), p.halo_sigma_px, p.halo_per_mm * gain);
            }
        }
        let pin_sigma = p.pin_sigma_frac * self.layout.pin_radius * p.px_per_mm;
        for (i, &(px, py)) in self.rest.iter().enumerate() {
            let (dx, dy) = field.displacements[i];
            splat(&mut buf, w, h, p.project((px + dx, py + dy)), pin_sigma, p.pin_peak);
        }
        if glare {
            for &i in &self.glare_pixels {
                buf[i] = p.glare_level as f32;
            }
        }
        if let (Some(seed), true) = (noise_seed, p.noise_sigma > 0.0) {
            let mut rng = SmallRng::seed_from_u64(derive_seed(seed, &[]));
            let sigma = p.noise_sigma as f32;
            for v in &mut buf {
                let n: f32 = rng.sample(StandardNormal);
                *v += sigma * n;
            }
        }
        let data = buf.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
        GrayFrame::new(w, h, data)
    }
}

pub fn render_tactile_image(
    layout: &PinLayout,
    field: &DeformationField,
    params: &RenderParams,
    glare: bool,
    noise_seed: Option<u64>,
) -> Result<GrayFrame> {
    Renderer::new(layout, params)?.render(field, glare, noise_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor_sim::{apply_contact, ContactPrimitive, ContactShape, DeformationModel};
    use crate::tactile_image::{abs_pixel_diff, detect_pins_with, PinDetectorParams};

    fn rest() -> GrayFrame {
        let layout = PinLayout::default();
        render_tactile_image(&layout, &DeformationField::zero(30), &RenderParams::default(), false, None).unwrap()
    }

    fn match_error(layout: &PinLayout, field: &DeformationField, found: &[(f64, f64)]) -> f64 {
        let p = RenderParams::default();
        let truth: Vec<_> = rest_pin_positions(layout)
            .iter()
            .zip(&field.displacements)
            .map(|(&(x, y), &(dx, dy))| p.project((x + dx, y + dy)))
            .collect();
        truth
            .iter()
            .map(|t| found.iter().map(|f| (f.0 - t.0).hypot(f.1 - t.1)).fold(f64::MAX, f64::min))
            .sum::<f64>()
            / truth.len() as f64
    }

    #[test]
    fn rest_render_is_deterministic() {
        assert_eq!(rest(), rest());
    }

    #[test]
    fn rest_pins_are_recovered() {
        let layout = PinLayout::default();
        let d = detect_pins_with(&rest(), &PinDetectorParams::default()).unwrap();
        assert_eq!(d.len(), 30);
        let err = match_error(&layout, &DeformationField::zero(30), &d.centroids);
        assert!(err < 0.5, "mean centroid error {err}");
    }

    #[test]
    fn deformed_pins_are_recovered() {
        let layout = PinLayout::default();
        let c = ContactPrimitive::new(ContactShape::Sphere { radius: 30.0 }, 3.0);
        let field = apply_contact(&layout, &DeformationModel::default(), &c).unwrap();
        let f = render_tactile_image(&layout, &field, &RenderParams::default(), false, Some(3)).unwrap();
        let d = detect_pins_with(&f, &PinDetectorParams::default()).unwrap();
        assert_eq!(d.len(), 30);
        let err = match_error(&layout, &field, &d.centroids);
        assert!(err < 1.0, "mean centroid error {err}");
    }

    #[test]
    fn glare_is_identical_across_contacts() {
        let layout = PinLayout::default();
        let p = RenderParams::default();
        let shapes = [ContactShape::Sphere { radius: 25.0 }, ContactShape::Edge { width: 1.0 }];
        let frames: Vec<_> = shapes
            .iter()
            .map(|&s| {
                let field = apply_contact(&layout, &DeformationModel::default(), &ContactPrimitive::new(s, 4.0)).unwrap();
                render_tactile_image(&layout, &field, &p, true, None).unwrap()
            })
            .collect();
        let (gx, gy) = p.glare_center;
        for y in 0..p.height {
            for x in 0..p.width {
                if (x as f64 - gx).powi(2) + (y as f64 - gy).powi(2) <= p.glare_radius.powi(2) {
                    assert_eq!(frames[0].get(x, y), p.glare_level);
                    assert_eq!(frames[1].get(x, y), p.glare_level);
                }
            }
        }
        assert!(abs_pixel_diff(&frames[0], &frames[1]).unwrap() > 0.0);
        // Glare is larger than any pin and is not detected as one.
        let d = detect_pins_with(&frames[0], &PinDetectorParams::default()).unwrap();
        assert!(d.areas.iter().all(|&a| a <= PinDetectorParams::default().max_area));
    }

    #[test]
    fn noise_is_seeded() {
        let layout = PinLayout::default();
        let p = RenderParams::default();
        let z = DeformationField::zero(30);
        let a = render_tactile_image(&layout, &z, &p, false, Some(9)).unwrap();
        let b = render_tactile_image(&layout, &z, &p, false, Some(9)).unwrap();
        let c = render_tactile_image(&layout, &z, &p, false, Some(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
