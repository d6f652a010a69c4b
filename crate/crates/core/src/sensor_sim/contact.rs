//! Phenomenological skin model: a Gaussian footprint pushes pins away from
//! the contact, with shape-dependent direction.

use serde::{Deserialize, Serialize};

use super::layout::{rest_pin_positions, PinLayout};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContactShape {
    Sphere { radius: f64 },
    /// Flat face, `length` along the local x axis.
    Box { length: f64, width: f64 },
    /// Axis along the local x axis.
    Cylinder { radius: f64, length: f64 },
    /// Straight ridge along the local x axis.
    Edge { width: f64 },
}

impl ContactShape {
    pub fn name(&self) -> &'static str {
        match self {
            ContactShape::Sphere { .. } => "sphere",
            ContactShape::Box { .. } => "box",
            ContactShape::Cylinder { .. } => "cylinder",
            ContactShape::Edge { .. } => "edge",
        }
    }

    fn dims(&self) -> Vec<f64> {
        match *self {
            ContactShape::Sphere { radius } => vec![radius],
            ContactShape::Box { length, width } => vec![length, width],
            ContactShape::Cylinder { radius, length } => vec![radius, length],
            ContactShape::Edge { width } => vec![width],
        }
    }

    /// Footprint spread `s`, mm.
    pub fn spread(&self) -> f64 {
        match *self {
            ContactShape::Sphere { radius } => 0.3 * radius,
            ContactShape::Box { .. } => 2.5,
            ContactShape::Cylinder { radius, .. } => 0.25 * radius,
            ContactShape::Edge { width } => 0.5 * width + 2.0,
        }
    }
}

/// In-plane placement of a contact on the sensor surface.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactPose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from the sensor x axis.
    pub rotation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPrimitive {
    pub shape: ContactShape,
    pub pose: ContactPose,
    /// Depth pressed into the skin, mm.
    pub indentation: f64,
}

impl ContactPrimitive {
    pub fn new(shape: ContactShape, indentation: f64) -> Self {
        Self {
            shape,
            pose: ContactPose::default(),
            indentation,
        }
    }

    pub fn with_indentation(mut self, indentation: f64) -> Self {
        self.indentation = indentation;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationModel {
    /// Displacement per mm of indentation at the footprint centre.
    pub gain: f64,
    pub max_indentation: f64,
}

impl Default for DeformationModel {
    fn default() -> Self {
        Self {
            gain: 0.4,
            max_indentation: 5.0,
        }
    }
}

/// Per-pin displacement (mm) and contact pressure proxy (mm of effective
/// indentation) that drives skin brightening in the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationField {
    pub displacements: Vec<(f64, f64)>,
    pub gains: Vec<f64>,
}

impl DeformationField {
    pub fn zero(pins: usize) -> Self {
        Self {
            displacements: vec![(0.0, 0.0); pins],
            gains: vec![0.0; pins],
        }
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacements.iter().map(|d| d.0.hypot(d.1)).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.displacements.iter().all(|&d| d == (0.0, 0.0)) && self.gains.iter().all(|&g| g == 0.0)
    }
}

/// Distance from a local point to the shape's contact locus and the unit
/// direction pointing away from it, plus the pressure weight in [0, 1].
fn footprint(shape: &ContactShape, (qx, qy): (f64, f64)) -> (f64, (f64, f64), f64) {
    let unit = |vx: f64, vy: f64| {
        let n = vx.hypot(vy);
        if n < 1e-12 {
            (0.0, 0.0)
        } else {
            (vx / n, vy / n)
        }
    };
    let s = shape.spread();
    let bell = |d: f64| (-d * d / (2.0 * s * s)).exp();
    match *shape {
        ContactShape::Sphere { .. } => {
            let d = qx.hypot(qy);
            (d, unit(qx, qy), bell(d))
        }
        ContactShape::Cylinder { length, .. } => {
            let px = qx.clamp(-length / 2.0, length / 2.0);
            let d = (qx - px).hypot(qy);
            (d, unit(qx - px, qy), bell(d))
        }
        ContactShape::Edge { .. } => (qy.abs(), unit(0.0, qy), bell(qy.abs())),
        ContactShape::Box { length, width } => {
            let (hx, hy) = (length / 2.0, width / 2.0);
            let inside = qx.abs() <= hx && qy.abs() <= hy;
            if inside {
                // Nearest edge from within; pressure is full.
                let (gx, gy) = (hx - qx.abs(), hy - qy.abs());
                if gx < gy {
                    (gx, (qx.signum(), 0.0), 1.0)
                } else {
                    (gy, (0.0, qy.signum()), 1.0)
                }
            } else {
                let (cx, cy) = (qx.clamp(-hx, hx), qy.clamp(-hy, hy));
                let d = (qx - cx).hypot(qy - cy);
                (d, unit(qx - cx, qy - cy), bell(d))
            }
        }
    }
}

pub fn apply_contact(
    layout: &PinLayout,
    model: &DeformationModel,
    contact: &ContactPrimitive,
) -> Result<DeformationField> {
    layout.validate()?;
    if contact.shape.dims().iter().any(|&d| !(d > 0.0)) {
        return Err(invalid(format!("contact dimensions must be positive: {:?}", contact.shape)));
    }
    let depth = contact.indentation;
    if !(0.0..=model.max_indentation).contains(&depth) {
        return Err(invalid(format!(
            "indentation {depth} mm outside [0, {}]",
            model.max_indentation
        )));
    }
    if model.gain * model.max_indentation >= layout.pitch {
        return Err(invalid("deformation gain allows pins to cross"));
    }
    let pins = rest_pin_positions(layout);
    if depth == 0.0 {
        return Ok(DeformationField::zero(pins.len()));
    }
    let (sin, cos) = contact.pose.rotation.sin_cos();
    let mut field = DeformationField::zero(pins.len());
    for (i, &(px, py)) in pins.iter().enumerate() {
        let (dx, dy) = (px - contact.pose.x, py - contact.pose.y);
        let local = (cos * dx + sin * dy, -sin * dx + cos * dy);
        let (d, (ux, uy), pressure) = footprint(&contact.shape, local);
        let s = contact.shape.spread();
        let magnitude = model.gain * depth * (-d * d / (2.0 * s * s)).exp();
        // Back to sensor coordinates.
        field.displacements[i] = (magnitude * (cos * ux - sin * uy), magnitude * (sin * ux + cos * uy));
        field.gains[i] = depth * pressure;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(depth: f64) -> ContactPrimitive {
        ContactPrimitive::new(ContactShape::Sphere { radius: 30.0 }, depth)
    }

    #[test]
    fn zero_indentation_gives_zero_field() {
        let f = apply_contact(&PinLayout::default(), &DeformationModel::default(), &sphere(0.0)).unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn over_indentation_and_bad_dims_rejected() {
        let (l, m) = (PinLayout::default(), DeformationModel::default());
        assert!(apply_contact(&l, &m, &sphere(5.5)).is_err());
        let bad = ContactPrimitive::new(ContactShape::Edge { width: 0.0 }, 1.0);
        assert!(apply_contact(&l, &m, &bad).is_err());
    }

    #[test]
    fn centered_sphere_is_symmetric_and_outward() {
        let layout = PinLayout::default();
        let pins = rest_pin_positions(&layout);
        let f = apply_contact(&layout, &DeformationModel::default(), &sphere(3.0)).unwrap();
        let find = |x: f64, y: f64| {
            pins.iter()
                .position(|p| (p.0 - x).abs() < 1e-9 && (p.1 - y).abs() < 1e-9)
                .unwrap()
        };
        for (i, &(x, y)) in pins.iter().enumerate() {
            let (dx, dy) = f.displacements[i];
            let mx = f.displacements[find(-x, y)];
            let my = f.displacements[find(x, -y)];
            assert!((dx + mx.0).abs() < 1e-12 && (dy - mx.1).abs() < 1e-12);
            assert!((dx - my.0).abs() < 1e-12 && (dy + my.1).abs() < 1e-12);
            assert!(dx * x + dy * y > 0.0, "pin {i} not pushed outward");
            if y != 0.0 {
                assert_eq!(dy.signum(), y.signum());
            }
        }
    }

    #[test]
    fn displacement_grows_with_indentation_and_stays_below_pitch() {
        let layout = PinLayout::default();
        let m = DeformationModel::default();
        let shapes = [
            ContactShape::Sphere { radius: 20.0 },
            ContactShape::Box { length: 14.0, width: 8.0 },
            ContactShape::Cylinder { radius: 30.0, length: 60.0 },
            ContactShape::Edge { width: 1.5 },
        ];
        for shape in shapes {
            let mut c = ContactPrimitive::new(shape, 1.5);
            c.pose = ContactPose { x: 2.0, y: 0.7, rotation: 0.4 };
            let a = apply_contact(&layout, &m, &c).unwrap();
            let b = apply_contact(&layout, &m, &c.with_indentation(3.0)).unwrap();
            for (da, db) in a.displacements.iter().zip(&b.displacements) {
                let (na, nb) = (da.0.hypot(da.1), db.0.hypot(db.1));
                if na > 0.0 {
                    assert!(nb > na);
                }
                assert!(nb <= layout.pitch);
            }
        }
    }

    #[test]
    fn edge_pushes_normal_to_ridge() {
        let c = ContactPrimitive::new(ContactShape::Edge { width: 1.5 }, 2.0);
        let f = apply_contact(&PinLayout::default(), &DeformationModel::default(), &c).unwrap();
        for &(dx, _) in &f.displacements {
            assert_eq!(dx, 0.0);
        }
    }
}
