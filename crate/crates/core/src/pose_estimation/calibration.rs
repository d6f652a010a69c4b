use serde::{Deserialize, Serialize};

use super::ObjectPose;
use crate::error::{invalid, Result};

/// Clearance above the object top at which the hand is placed.
pub const GRASP_CLEARANCE_MM: f64 = 20.0;

/// Planar affine map `[x', y'] = [[a, b], [c, d]] [x, y] + [tx, ty]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for Affine2 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn from_params(p: [f64; 6]) -> Self {
        Self {
            a: p[0],
            b: p[1],
            c: p[2],
            d: p[3],
            tx: p[4],
            ty: p[5],
        }
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.tx, self.ty]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)
    }

    pub fn apply_vector(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }

    pub fn inverse(&self) -> Result<Affine2> {
        let det = self.det();
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs());
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale {
            return Err(invalid(format!("calibration is singular (det = {det})")));
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Ok(Affine2 {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        })
    }
}

/// Camera-to-robot calibration: a planar affine for pixel coordinates and a
/// linear map from depth to robot height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraCalibration {
    pub planar: Affine2,
    pub depth_scale: f64,
    pub depth_offset: f64,
}

impl Default for CameraCalibration {
    fn default() -> Self {
        Self {
            planar: Affine2::IDENTITY,
            depth_scale: 1.0,
            depth_offset: 0.0,
        }
    }
}

/// Hand placement in the robot frame, mm and radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspTarget {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
}

fn wrap_half_pi(mut t: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    while t > FRAC_PI_2 {
        t -= PI;
    }
    while t <= -FRAC_PI_2 {
        t += PI;
    }
    t
}

pub fn camera_to_robot(pose: &ObjectPose, calib: &CameraCalibration) -> Result<GraspTarget> {
    calib.planar.inverse()?;
    if calib.depth_scale == 0.0 || !calib.depth_scale.is_finite() {
        return Err(invalid("calibration depth scale must be non-zero"));
    }
    let (x, y) = calib.planar.apply(pose.centroid);
    let (vx, vy) = calib.planar.apply_vector((pose.theta.cos(), pose.theta.sin()));
    Ok(GraspTarget {
        x,
        y,
        z: calib.depth_scale * pose.z + calib.depth_offset + GRASP_CLEARANCE_MM,
        theta: wrap_half_pi(vy.atan2(vx)),
    })
}

/// Inverse of [`camera_to_robot`]: returns pixel centroid, depth and image angle.
pub fn robot_to_camera(target: &GraspTarget, calib: &CameraCalibration) -> Result<((f64, f64), f64, f64)> {
    let inv = calib.planar.inverse()?;
    if calib.depth_scale == 0.0 || !calib.depth_scale.is_finite() {
        return Err(invalid("calibration depth scale must be non-zero"));
    }
    let centroid = inv.apply((target.x, target.y));
    let (vx, vy) = inv.apply_vector((target.theta.cos(), target.theta.sin()));
    let z = (target.z - GRASP_CLEARANCE_MM - calib.depth_offset) / calib.depth_scale;
    Ok((centroid, z, wrap_half_pi(vy.atan2(vx))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(c: (f64, f64), z: f64, theta: f64) -> ObjectPose {
        ObjectPose {
            centroid: c,
            z,
            theta,
            major_axis: 30.0,
            minor_axis: 10.0,
            aspect_ratio: 3.0,
            degenerate: false,
        }
    }

    #[test]
    fn identity_passes_through() {
        let t = camera_to_robot(&pose((12.0, 34.0), 700.0, 0.3), &CameraCalibration::default()).unwrap();
        assert_eq!((t.x, t.y), (12.0, 34.0));
        assert_eq!(t.z, 720.0);
        assert!((t.theta - 0.3).abs() < 1e-12);
    }

    #[test]
    fn translation_shifts_centroid() {
        let calib = CameraCalibration {
            planar: Affine2 { tx: 5.0, ty: -7.0, ..Affine2::IDENTITY },
            ..Default::default()
        };
        let t = camera_to_robot(&pose((1.0, 2.0), 600.0, 0.0), &calib).unwrap();
        assert_eq!((t.x, t.y), (6.0, -5.0));
    }

    #[test]
    fn singular_calibration_rejected() {
        let calib = CameraCalibration {
            planar: Affine2::from_params([1.0, 2.0, 2.0, 4.0, 0.0, 0.0]),
            ..Default::default()
        };
        assert!(camera_to_robot(&pose((0.0, 0.0), 1.0, 0.0), &calib).is_err());
    }

    #[test]
    fn roundtrip_recovers_target() {
        let calib = CameraCalibration {
            planar: Affine2::from_params([0.0, -2.1, 1.9, 0.1, 410.0, -125.0]),
            depth_scale: -1.0,
            depth_offset: 980.0,
        };
        let target = GraspTarget { x: 312.5, y: -44.25, z: 215.0, theta: 0.7 };
        let (c, z, th) = robot_to_camera(&target, &calib).unwrap();
        let back = camera_to_robot(&pose(c, z, th), &calib).unwrap();
        assert!((back.x - target.x).abs() < 1e-6);
        assert!((back.y - target.y).abs() < 1e-6);
        assert!((back.z - target.z).abs() < 1e-6);
        assert!((back.theta - target.theta).abs() < 1e-9);
    }
}
