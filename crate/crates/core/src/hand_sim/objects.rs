//! Synthetic stand-ins for the classification object set. Each object is a
//! set of three per-finger contact templates plus the footprint the depth
//! camera sees.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sensor_sim::{ContactPose, ContactPrimitive, ContactShape};

/// Leading slice of the registry used by desk-scale experiments.
pub const DESK_OBJECT_COUNT: usize = 8;

/// Objects used in the torque sweep; the last one is never trained on.
pub const SWEEP_OBJECTS: [&str; 4] = ["Baseball", "Orange", "Bleach", "GumPot"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub class_id: usize,
    pub name: String,
    /// Contact template per finger (thumb first).
    pub fingers: [ContactPrimitive; 3],
    pub graspability: f64,
    pub aspect_ratio: f64,
    /// Length and width of the tray footprint, mm.
    pub footprint: (f64, f64),
    pub height: f64,
    /// Round footprint (ellipse) rather than a rectangle.
    pub round: bool,
}

impl SimObject {
    pub fn validate(&self) -> Result<()> {
        if !(self.graspability > 0.0 && self.graspability <= 1.0) {
            return Err(invalid(format!("{}: graspability must be in (0, 1]", self.name)));
        }
        if !(self.aspect_ratio >= 1.0) {
            return Err(invalid(format!("{}: aspect ratio must be >= 1", self.name)));
        }
        let (l, w) = self.footprint;
        if !(l >= w && w > 0.0 && self.height > 0.0) {
            return Err(invalid(format!("{}: bad footprint {:?}", self.name, self.footprint)));
        }
        Ok(())
    }
}

fn sphere(radius: f64, depth: f64) -> ContactPrimitive {
    ContactPrimitive::new(ContactShape::Sphere { radius }, depth)
}

fn cyl(radius: f64, length: f64, rotation: f64, depth: f64) -> ContactPrimitive {
    rotated(ContactShape::Cylinder { radius, length }, rotation, depth)
}

fn cube(length: f64, width: f64, rotation: f64, depth: f64) -> ContactPrimitive {
    rotated(ContactShape::Box { length, width }, rotation, depth)
}

fn edge(width: f64, rotation: f64, depth: f64) -> ContactPrimitive {
    rotated(ContactShape::Edge { width }, rotation, depth)
}

fn rotated(shape: ContactShape, rotation: f64, depth: f64) -> ContactPrimitive {
    ContactPrimitive {
        shape,
        pose: ContactPose { x: 0.0, y: 0.0, rotation },
        indentation: depth,
    }
}

const R: f64 = FRAC_PI_2;

struct Def {
    name: &'static str,
    fingers: [ContactPrimitive; 3],
    graspability: f64,
    footprint: (f64, f64),
    height: f64,
    round: bool,
}

fn build(class_id: usize, d: Def) -> SimObject {
    SimObject {
        class_id,
        name: d.name.to_string(),
        fingers: d.fingers,
        graspability: d.graspability,
        aspect_ratio: d.footprint.0 / d.footprint.1,
        footprint: d.footprint,
        height: d.height,
        round: d.round,
    }
}

fn defs() -> Vec<Def> {
    let ball = |name, r: f64, depth, g| Def {
        name,
        fingers: [sphere(r, depth), sphere(r, depth), sphere(r, depth)],
        graspability: g,
        footprint: (2.0 * r, 2.0 * r),
        height: 2.0 * r,
        round: true,
    };
    let d = |name, fingers, graspability, footprint, height, round| Def {
        name,
        fingers,
        graspability,
        footprint,
        height,
        round,
    };
    vec![
        d("Baseball", [sphere(37.0, 3.6), sphere(37.0, 3.6), edge(1.2, 0.6, 3.2)], 0.97, (74.0, 74.0), 74.0, true),
        ball("Orange", 45.0, 4.2, 0.98),
        d("Bleach", [cube(36.0, 22.0, 0.0, 3.0), cyl(20.0, 60.0, R, 3.2), cyl(20.0, 60.0, R, 3.2)], 0.95, (100.0, 65.0), 250.0, false),
        d("MustardBottle", [cube(30.0, 14.0, 0.0, 3.4), cube(30.0, 14.0, 0.0, 3.4), edge(1.0, R, 3.5)], 0.95, (95.0, 58.0), 190.0, false),
        d("TomatoSoupCan", [cyl(33.0, 100.0, 0.0, 3.5), cyl(33.0, 100.0, 0.0, 3.5), cyl(33.0, 100.0, 0.0, 3.5)], 0.97, (101.0, 66.0), 66.0, false),
        d("Mug", [cyl(40.0, 80.0, R, 3.3), cyl(40.0, 80.0, R, 3.3), edge(4.0, 0.0, 3.6)], 0.94, (117.0, 80.0), 82.0, false),
        d("Banana", [cyl(17.0, 120.0, R, 3.0), cyl(17.0, 120.0, R, 3.0), sphere(15.0, 2.6)], 0.92, (190.0, 36.0), 36.0, false),
        d("GelatinBox", [cube(20.0, 20.0, 0.0, 3.5), edge(1.0, 0.0, 3.5), edge(1.0, R, 3.5)], 0.96, (89.0, 73.0), 28.0, false),
        ball("Apple", 38.0, 3.4, 0.97),
        d("Lemon", [sphere(27.0, 3.2), sphere(27.0, 3.2), cyl(27.0, 30.0, 0.0, 3.0)], 0.96, (68.0, 54.0), 54.0, true),
        ball("Peach", 30.0, 3.8, 0.97),
        ball("Plum", 25.0, 3.0, 0.96),
        d("Pear", [sphere(30.0, 3.3), sphere(30.0, 3.3), cyl(20.0, 40.0, R, 3.0)], 0.95, (100.0, 66.0), 66.0, true),
        d("TunaCan", [cyl(42.0, 30.0, 0.0, 3.0), cube(30.0, 8.0, R, 3.2), cube(30.0, 8.0, R, 3.2)], 0.93, (85.0, 85.0), 33.0, true),
        d("PuddingBox", [cube(40.0, 30.0, 0.0, 3.2), cube(40.0, 30.0, 0.0, 3.2), edge(1.0, R, 3.2)], 0.96, (110.0, 89.0), 35.0, false),
        d("PottedMeatCan", [cube(30.0, 18.0, R, 3.4), cube(30.0, 18.0, R, 3.4), edge(2.0, 0.0, 3.4)], 0.95, (102.0, 57.0), 83.0, false),
        d("SugarBox", [cube(40.0, 40.0, 0.0, 3.0), cube(40.0, 40.0, 0.0, 3.0), cube(40.0, 40.0, 0.0, 3.0)], 0.96, (175.0, 89.0), 45.0, false),
        d("CrackerBox", [edge(1.0, 0.0, 3.4), cube(40.0, 40.0, 0.0, 3.4), edge(1.0, 0.0, 3.4)], 0.93, (210.0, 158.0), 70.0, false),
        d("ChipsCan", [cyl(37.0, 200.0, 0.0, 3.6), cyl(37.0, 200.0, 0.0, 3.6), cyl(37.0, 200.0, 0.0, 3.6)], 0.96, (250.0, 75.0), 75.0, false),
        ball("Softball", 55.0, 3.8, 0.96),
        ball("Racquetball", 28.0, 2.8, 0.97),
        d("FoamBrick", [cube(30.0, 20.0, 0.0, 4.5), cube(30.0, 20.0, 0.0, 4.5), cube(30.0, 20.0, 0.0, 4.5)], 0.98, (75.0, 50.0), 50.0, false),
        d("WindexBottle", [cube(25.0, 12.0, 0.0, 3.0), cyl(45.0, 100.0, R, 3.4), cyl(45.0, 100.0, R, 3.4)], 0.92, (108.0, 80.0), 270.0, false),
        d("MasterChefCan", [cyl(50.0, 100.0, 0.0, 3.2), cyl(50.0, 100.0, 0.0, 3.2), cyl(50.0, 100.0, 0.0, 3.2)], 0.96, (139.0, 102.0), 102.0, false),
        d("WoodBlock", [cube(40.0, 40.0, 0.0, 3.2), edge(1.0, R, 3.6), edge(1.0, R, 3.6)], 0.94, (90.0, 85.0), 85.0, false),
        d("RubiksCube", [cube(28.0, 28.0, 0.0, 3.0), edge(0.8, 0.3, 3.2), cube(28.0, 28.0, 0.0, 3.0)], 0.96, (57.0, 57.0), 57.0, false),
    ]
}

/// The 26 training objects, class ids 0..26.
pub fn object_registry() -> Vec<SimObject> {
    defs().into_iter().enumerate().map(|(i, d)| build(i, d)).collect()
}

/// Objects that never appear in training data. Class ids continue after the registry.
pub fn held_out_objects() -> Vec<SimObject> {
    let base = object_registry().len();
    vec![build(
        base,
        Def {
            name: "GumPot",
            fingers: [cyl(45.0, 60.0, R, 3.4), cyl(45.0, 60.0, R, 3.4), cyl(45.0, 60.0, R, 3.4)],
            graspability: 0.96,
            footprint: (90.0, 90.0),
            height: 100.0,
            round: true,
        },
    )]
}

pub fn desk_objects() -> Vec<SimObject> {
    object_registry().into_iter().take(DESK_OBJECT_COUNT).collect()
}

/// Looks up a registered or held-out object by name (case-insensitive).
pub fn find_object(name: &str) -> Result<SimObject> {
    object_registry()
        .into_iter()
        .chain(held_out_objects())
        .find(|o| o.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| invalid(format!("unknown object {name:?}")))
}
