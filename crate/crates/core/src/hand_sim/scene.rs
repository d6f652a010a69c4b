//! Overhead depth view of the tray and the grasp planner that reads it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::objects::SimObject;
use crate::error::Result;
use crate::pose_estimation::{
    camera_to_robot, pose_from_moments, segment_object, Affine2, CameraCalibration, DepthImage, GraspTarget,
    ObjectPose,
};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrayScene {
    pub width: usize,
    pub height: usize,
    pub mm_per_px: f64,
    /// Camera-to-tray distance, mm.
    pub tray_depth: f64,
    /// Uniform depth noise amplitude, mm.
    pub noise_mm: f64,
}

impl Default for TrayScene {
    fn default() -> Self {
        Self {
            width: 200,
            height: 150,
            mm_per_px: 2.5,
            tray_depth: 900.0,
            noise_mm: 2.0,
        }
    }
}

/// Object pose on the tray in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlacement {
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub yaw: f64,
}

impl TrayScene {
    /// Pixel `(px, py)` maps to robot `(s * (px - w/2), s * (py - h/2))`;
    /// robot height is `tray_depth - depth`.
    pub fn calibration(&self) -> CameraCalibration {
        let s = self.mm_per_px;
        CameraCalibration {
            planar: Affine2::from_params([
                s,
                0.0,
                0.0,
                s,
                -s * self.width as f64 / 2.0,
                -s * self.height as f64 / 2.0,
            ]),
            depth_scale: -1.0,
            depth_offset: self.tray_depth,
        }
    }

    /// A random placement that keeps the footprint inside the tray.
    pub fn random_placement(&self, object: &SimObject, seed: u64) -> ObjectPlacement {
        let mut rng = rng_for(seed, &[]);
        let margin = object.footprint.0 / 2.0 + 10.0;
        let half_w = (self.width as f64 * self.mm_per_px / 2.0 - margin).max(0.0);
        let half_h = (self.height as f64 * self.mm_per_px / 2.0 - margin).max(0.0);
        ObjectPlacement {
            x: rng.random_range(-half_w..=half_w) * 0.6,
            y: rng.random_range(-half_h..=half_h) * 0.6,
            yaw: rng.random_range(0.0..std::f64::consts::PI),
        }
    }
}

pub fn render_depth_scene(scene: &TrayScene, object: &SimObject, place: &ObjectPlacement, seed: u64) -> Result<DepthImage> {
    let mut rng = rng_for(seed, &[]);
    let (half_l, half_w) = (object.footprint.0 / 2.0, object.footprint.1 / 2.0);
    let (sin, cos) = place.yaw.sin_cos();
    let s = scene.mm_per_px;
    let mut data = Vec::with_capacity(scene.width * scene.height);
    for py in 0..scene.height {
        for px in 0..scene.width {
            let rx = s * (px as f64 - scene.width as f64 / 2.0) - place.x;
            let ry = s * (py as f64 - scene.height as f64 / 2.0) - place.y;
            let (u, v) = (cos * rx + sin * ry, -sin * rx + cos * ry);
            let inside = if object.round {
                (u / half_l).powi(2) + (v / half_w).powi(2) <= 1.0
            } else {
                u.abs() <= half_l && v.abs() <= half_w
            };
            let base = if inside { scene.tray_depth - object.height } else { scene.tray_depth };
            let noise = if scene.noise_mm > 0.0 {
                rng.random_range(-scene.noise_mm..=scene.noise_mm)
            } else {
                0.0
            };
            data.push((base + noise).round().max(1.0) as u16);
        }
    }
    DepthImage::new(scene.width, scene.height, data)
}

/// Segment, fit moments and map the pose to a robot-frame grasp target.
pub fn estimate_grasp(scene: &TrayScene, depth: &DepthImage) -> Result<(ObjectPose, GraspTarget)> {
    let mask = segment_object(depth, depth.full_region())?;
    let pose = pose_from_moments(&mask, depth)?;
    let target = camera_to_robot(&pose, &scene.calibration())?;
    Ok((pose, target))
}
