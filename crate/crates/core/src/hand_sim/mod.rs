//! Three-finger hand at grasp-event resolution: perturbations, outcome
//! ground truth, the SSIM success detector and the collection loop.

mod collect;
mod detector;
mod objects;
mod outcome;
mod scene;
mod sweep;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng_for;

pub use collect::{
    collect_grasp_data, write_grasp, GraspCapture, GraspConfig, GraspRecord, Manifest, CLASSIFICATION_TORQUE,
};
pub use detector::{grasp_success_detector, mode_ssim, quantized_mode, DetectorResult, DETECTOR_FRAMES, DETECTOR_THRESHOLD};
pub use objects::{
    desk_objects, find_object, held_out_objects, object_registry, SimObject, DESK_OBJECT_COUNT, SWEEP_OBJECTS,
};
pub use outcome::{
    calibrate_offset_weight, perturbed_state, OutcomeModel, CALIBRATED_OFFSET_WEIGHT, TARGET_SUCCESS_RATE,
};
pub use scene::{estimate_grasp, render_depth_scene, ObjectPlacement, TrayScene};
pub use sweep::{sweep_torques, torque_sweep, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    /// Coupled rotation of fingers 2 and 3, degrees.
    pub finger_rotation: f64,
    /// Fraction of maximum motor torque.
    pub torque_fraction: f64,
}

impl HandState {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=90.0).contains(&self.finger_rotation) {
            return Err(invalid(format!("finger rotation {} outside [0, 90]", self.finger_rotation)));
        }
        if !(self.torque_fraction > 0.0 && self.torque_fraction <= 1.0) {
            return Err(invalid(format!("torque fraction {} outside (0, 1]", self.torque_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPerturbation {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Degrees.
    pub dtheta: f64,
    pub torque_fraction: f64,
}

pub const PERTURB_XY_MM: f64 = 20.0;
pub const PERTURB_Z_MM: f64 = 20.0;
pub const PERTURB_THETA_DEG: f64 = 30.0;
pub const PERTURB_TORQUE: (f64, f64) = (0.20, 0.35);

impl GraspPerturbation {
    pub fn planar_offset(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn is_valid(&self) -> bool {
        self.dx.abs() <= PERTURB_XY_MM
            && self.dy.abs() <= PERTURB_XY_MM
            && (0.0..=PERTURB_Z_MM).contains(&self.dz)
            && self.dtheta.abs() <= PERTURB_THETA_DEG
            && (PERTURB_TORQUE.0..=PERTURB_TORQUE.1).contains(&self.torque_fraction)
    }
}

/// Independent uniform draws over each field's range.
pub fn sample_perturbation(seed: u64) -> GraspPerturbation {
    let mut rng = rng_for(seed, &[]);
    GraspPerturbation {
        dx: rng.random_range(-PERTURB_XY_MM..=PERTURB_XY_MM),
        dy: rng.random_range(-PERTURB_XY_MM..=PERTURB_XY_MM),
        dz: rng.random_range(0.0..=PERTURB_Z_MM),
        dtheta: rng.random_range(-PERTURB_THETA_DEG..=PERTURB_THETA_DEG),
        torque_fraction: rng.random_range(PERTURB_TORQUE.0..=PERTURB_TORQUE.1),
    }
}
