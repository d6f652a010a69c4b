use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::contact::{apply_contact, ContactPrimitive, DeformationModel};
use super::layout::PinLayout;
use super::render::{RenderParams, Renderer};
use crate::error::{invalid, Result};
use crate::seed::{derive_seed, rng_for};
use crate::tactile_image::GrayFrame;

pub const DEFAULT_FPS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampProfile {
    Linear,
    /// Cubic smoothstep.
    Smooth,
}

/// Indentation over time: zero until `start_s`, rising to the contact's
/// indentation over `duration_s`, then held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactTrajectory {
    pub contact: ContactPrimitive,
    pub start_s: f64,
    pub duration_s: f64,
    pub profile: RampProfile,
    /// Relative per-frame indentation jitter (standard deviation).
    pub jitter: f64,
}

impl ContactTrajectory {
    pub fn indentation_at(&self, t: f64) -> f64 {
        let target = self.contact.indentation;
        if self.duration_s <= 0.0 {
            return if t >= self.start_s { target } else { 0.0 };
        }
        let u = ((t - self.start_s) / self.duration_s).clamp(0.0, 1.0);
        let shape = match self.profile {
            RampProfile::Linear => u,
            RampProfile::Smooth => u * u * (3.0 - 2.0 * u),
        };
        target * shape
    }
}

/// Renders `n_frames` of a grasp at `fps`. Frame `i` uses noise seed
/// derived from `(seed, i)`, so videos are bit-reproducible.
#[allow(clippy::too_many_arguments)]
pub fn simulate_grasp_video(
    layout: &PinLayout,
    model: &DeformationModel,
    trajectory: &ContactTrajectory,
    n_frames: usize,
    fps: f64,
    render: &RenderParams,
    glare: bool,
    seed: u64,
) -> Result<Vec<GrayFrame>> {
    if n_frames == 0 {
        return Err(invalid("a grasp video needs at least one frame"));
    }
    if !(fps > 0.0) {
        return Err(invalid("fps must be positive"));
    }
    let mut jitter_rng = rng_for(seed, &[0x6a17]);
    let depths: Vec<f64> = (0..n_frames)
        .map(|i| {
            let base = trajectory.indentation_at(i as f64 / fps);
            let n: f64 = jitter_rng.sample(StandardNormal);
            if base > 0.0 {
                (base * (1.0 + trajectory.jitter * n)).clamp(0.0, model.max_indentation)
            } else {
                0.0
            }
        })
        .collect();
    let renderer = Renderer::new(layout, render)?;
    render_depth_sequence(&renderer, model, &trajectory.contact, &depths, glare, seed)
}

/// Renders one frame per entry of `depths` (indentation, mm) for a fixed
/// contact. Noise for frame `i` is seeded from `(seed, i)`.
pub fn render_depth_sequence(
    renderer: &Renderer,
    model: &DeformationModel,
    contact: &ContactPrimitive,
    depths: &[f64],
    glare: bool,
    seed: u64,
) -> Result<Vec<GrayFrame>> {
    let layout = renderer.layout();
    let mut rest = None;
    depths
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let noise = Some(derive_seed(seed, &[i as u64]));
            if d <= 0.0 {
                let field = rest.get_or_insert_with(|| super::DeformationField::zero(layout.pin_count()));
                return renderer.render(field, glare, noise);
            }
            let field = apply_contact(layout, model, &contact.with_indentation(d))?;
            renderer.render(&field, glare, noise)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor_sim::ContactShape;
    use crate::tactile_image::{abs_pixel_diff, contact_frame_index};

    fn trajectory(depth: f64, profile: RampProfile) -> ContactTrajectory {
        ContactTrajectory {
            contact: ContactPrimitive::new(ContactShape::Sphere { radius: 35.0 }, depth),
            start_s: 0.5,
            duration_s: 3.0,
            profile,
            jitter: 0.0,
        }
    }

    fn video(t: &ContactTrajectory, n: usize, seed: u64) -> Vec<GrayFrame> {
        simulate_grasp_video(
            &PinLayout::default(),
            &DeformationModel::default(),
            t,
            n,
            DEFAULT_FPS,
            &RenderParams::default(),
            false,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn zero_ramp_gives_identical_rest_frames() {
        let render = RenderParams { noise_sigma: 0.0, ..Default::default() };
        let frames = simulate_grasp_video(
            &PinLayout::default(),
            &DeformationModel::default(),
            &trajectory(0.0, RampProfile::Smooth),
            5,
            DEFAULT_FPS,
            &render,
            false,
            1,
        )
        .unwrap();
        assert!(frames.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn deformation_is_monotone_along_ramp() {
        let frames = video(&trajectory(4.0, RampProfile::Smooth), 80, 5);
        let diffs: Vec<f64> = frames.iter().map(|f| abs_pixel_diff(f, &frames[0]).unwrap()).collect();
        for w in diffs.windows(2) {
            assert!(w[1] >= w[0] - 1.0, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn linear_ramp_contact_at_quarter() {
        // Ramp occupies frames 10..70.
        let mut t = trajectory(4.0, RampProfile::Linear);
        t.contact.shape = ContactShape::Box { length: 30.0, width: 12.0 };
        let frames = video(&t, 90, 11);
        let c = contact_frame_index(&frames, &frames[0]).unwrap();
        let expected = 10.0 + 0.25 * 60.0;
        assert!((c as f64 - expected).abs() <= 2.0, "contact index {c}, expected {expected}");
    }

    #[test]
    fn same_seed_same_video() {
        let mut t = trajectory(3.0, RampProfile::Smooth);
        t.jitter = 0.02;
        assert_eq!(video(&t, 12, 4), video(&t, 12, 4));
        assert_ne!(video(&t, 12, 4), video(&t, 12, 5));
    }

    #[test]
    fn zero_frames_rejected() {
        let r = simulate_grasp_video(
            &PinLayout::default(),
            &DeformationModel::default(),
            &trajectory(1.0, RampProfile::Linear),
            0,
            DEFAULT_FPS,
            &RenderParams::default(),
            false,
            0,
        );
        assert!(r.is_err());
    }
}
