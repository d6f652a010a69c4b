use serde::{Deserialize, Serialize};

use super::{DepthImage, Mask};
use crate::error::{invalid, Error, Result};

/// Below this axis ratio the orientation is noise and is reported as 0.
pub const DEGENERATE_ASPECT: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    /// Centre of mass in pixels.
    pub centroid: (f64, f64),
    /// Minimum depth over the object, mm.
    pub z: f64,
    /// Major-axis angle from the image x axis, in (-pi/2, pi/2].
    pub theta: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub aspect_ratio: f64,
    /// Near-circular footprint; `theta` is fixed to 0.
    pub degenerate: bool,
}

/// Best-fit ellipse from the mask's image moments.
///
/// Each pixel is treated as a unit square, so second moments carry a 1/12
/// term per axis. Axes are `2 * sqrt(eigenvalue)` of the normalised central
/// moment matrix.
pub fn pose_from_moments(mask: &Mask, depth: &DepthImage) -> Result<ObjectPose> {
    if mask.width != depth.width() || mask.height != depth.height() {
        return Err(invalid("mask and depth image dimensions differ"));
    }
    let (mut m00, mut m10, mut m01) = (0f64, 0f64, 0f64);
    let mut z = f64::INFINITY;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                m00 += 1.0;
                m10 += x as f64;
                m01 += y as f64;
                let d = depth.get(x, y);
                if d > 0 {
                    z = z.min(d as f64);
                }
            }
        }
    }
    if m00 == 0.0 {
        return Err(Error::Estimation("empty object mask".into()));
    }
    if !z.is_finite() {
        return Err(Error::Estimation("object mask has no valid depth".into()));
    }
    let (cx, cy) = (m10 / m00, m01 / m00);
    let (mut mu20, mut mu02, mut mu11) = (0f64, 0f64, 0f64);
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
        }
    }
    let a = mu20 / m00 + 1.0 / 12.0;
    let c = mu02 / m00 + 1.0 / 12.0;
    let b = mu11 / m00;
    let half_trace = (a + c) / 2.0;
    let spread = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let major = 2.0 * (half_trace + spread).sqrt();
    let minor = 2.0 * (half_trace - spread).max(0.0).sqrt();
    let aspect_ratio = major / minor;
    let degenerate = aspect_ratio < DEGENERATE_ASPECT;
    let theta = if degenerate {
        0.0
    } else {
        let t = 0.5 * (2.0 * b).atan2(a - c);
        // atan2 can return -pi exactly; keep the half-open interval.
        if t <= -std::f64::consts::FRAC_PI_2 {
            t + std::f64::consts::PI
        } else {
            t
        }
    };
    Ok(ObjectPose {
        centroid: (cx, cy),
        z,
        theta,
        major_axis: major,
        minor_axis: minor,
        aspect_ratio,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth_for(w: usize, h: usize) -> DepthImage {
        DepthImage::new(w, h, vec![700; w * h]).unwrap()
    }

    /// Mask of a `len` x `wid` rectangle rotated by `angle` about (cx, cy),
    /// sampled at pixel centres.
    pub(crate) fn rotated_rect(w: usize, h: usize, c: (f64, f64), len: f64, wid: f64, angle: f64) -> Mask {
        let (s, co) = angle.sin_cos();
        Mask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - c.0, y as f64 - c.1);
            let u = dx * co + dy * s;
            let v = -dx * s + dy * co;
            u.abs() < len / 2.0 && v.abs() < wid / 2.0
        })
    }

    #[test]
    fn axis_aligned_rectangle() {
        let mask = Mask::from_fn(120, 80, |x, y| (30..90).contains(&x) && (30..50).contains(&y));
        let pose = pose_from_moments(&mask, &depth_for(120, 80)).unwrap();
        assert!(pose.theta.abs() < 1e-9);
        assert!((pose.aspect_ratio - 3.0).abs() < 0.1, "{}", pose.aspect_ratio);
        assert_eq!(pose.centroid, (59.5, 39.5));
        assert_eq!(pose.z, 700.0);
    }

    #[test]
    fn rotated_rectangle_orientation() {
        let angle = 30f64.to_radians();
        let mask = rotated_rect(160, 160, (80.0, 80.0), 60.0, 20.0, angle);
        let pose = pose_from_moments(&mask, &depth_for(160, 160)).unwrap();
        assert!((pose.theta - angle).abs() < 1f64.to_radians(), "{}", pose.theta.to_degrees());
    }

    #[test]
    fn disc_is_degenerate() {
        let mask = Mask::from_fn(100, 100, |x, y| (x as f64 - 50.0).hypot(y as f64 - 50.0) < 20.0);
        let pose = pose_from_moments(&mask, &depth_for(100, 100)).unwrap();
        assert!((pose.aspect_ratio - 1.0).abs() < 0.05);
        assert!(pose.degenerate);
        assert_eq!(pose.theta, 0.0);
    }

    #[test]
    fn single_pixel_and_empty_masks() {
        let mut mask = Mask::empty(10, 10);
        assert!(matches!(pose_from_moments(&mask, &depth_for(10, 10)), Err(Error::Estimation(_))));
        mask.bits[33] = true;
        let pose = pose_from_moments(&mask, &depth_for(10, 10)).unwrap();
        assert_eq!(pose.aspect_ratio, 1.0);
        assert_eq!(pose.theta, 0.0);
        assert!(pose.minor_axis > 0.0);
    }

    #[test]
    fn vertical_rectangle_maps_to_half_pi() {
        let mask = Mask::from_fn(80, 120, |x, y| (30..50).contains(&x) && (30..90).contains(&y));
        let pose = pose_from_moments(&mask, &depth_for(80, 120)).unwrap();
        assert!((pose.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-9, "{}", pose.theta);
    }
}
