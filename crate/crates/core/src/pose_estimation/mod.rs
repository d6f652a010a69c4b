//! Object localisation from an overhead depth image.

mod calibration;
mod moments;

pub use calibration::{camera_to_robot, robot_to_camera, Affine2, CameraCalibration, GraspTarget};
pub use moments::{pose_from_moments, ObjectPose, DEGENERATE_ASPECT};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tactile_image::Rect;

/// Points must be this much closer than the tray to count as object.
pub const TRAY_OFFSET_MM: f64 = 10.0;

/// 16-bit depth map in millimetres; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(invalid(format!(
                "depth image {width}x{height} with {} samples",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn full_region(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }
}

/// Binary mask with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Pixels inside `tray_region` closer than the mean tray depth minus 10 mm.
/// The mean includes object pixels, which biases it for large objects.
pub fn segment_object(depth: &DepthImage, tray_region: Rect) -> Result<Mask> {
    if !tray_region.fits(depth.width(), depth.height()) {
        return Err(invalid(format!("tray region {tray_region:?} outside depth image")));
    }
    let pixels = || {
        (tray_region.y..tray_region.y + tray_region.height).flat_map(move |y| {
            (tray_region.x..tray_region.x + tray_region.width).map(move |x| (x, y))
        })
    };
    let (mut sum, mut n) = (0u64, 0u64);
    for (x, y) in pixels() {
        let d = depth.get(x, y);
        if d > 0 {
            sum += d as u64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Estimation("no valid depth pixels in tray region".into()));
    }
    let cutoff = sum as f64 / n as f64 - TRAY_OFFSET_MM;
    let mut mask = Mask::empty(depth.width(), depth.height());
    for (x, y) in pixels() {
        let d = depth.get(x, y);
        if d > 0 && (d as f64) < cutoff {
            mask.bits[y * depth.width() + x] = true;
        }
    }
    Ok(mask)
}

/// Finger rotation in degrees: 45 (spherical) at 1:1, 0 (cylindrical) at
/// 3:1 and beyond, linear in between.
pub fn select_grasp_rotation(aspect_ratio: f64) -> Result<f64> {
    if !(aspect_ratio >= 1.0) {
        return Err(invalid(format!("aspect ratio must be >= 1, got {aspect_ratio}")));
    }
    Ok((45.0 * (3.0 - aspect_ratio) / 2.0).clamp(0.0, 45.0))
}
