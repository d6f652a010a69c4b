//! Grasps at fixed pose with increasing torque, scored by a predictor.

use serde::{Deserialize, Serialize};

use super::collect::{run_grasp, GraspCapture, GraspConfig, GraspSetup};
use super::objects::find_object;
use super::HandState;
use crate::error::Result;
use crate::pose_estimation::select_grasp_rotation;
use crate::seed::derive_seed;
use crate::sensor_sim::Renderer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub object: String,
    pub torque: f64,
    pub predicted_success_prob: f64,
    /// Ground truth from lifting the object.
    pub actual_outcome: bool,
}

/// Twelve torques from 0.11 in steps of 0.02 (ending at 0.33).
pub fn sweep_torques() -> Vec<f64> {
    (0..12).map(|i| (11 + 2 * i) as f64 / 100.0).collect()
}

/// One grasp per torque per object, centred on the object with the planned
/// finger rotation. `predict` maps a grasp's frames to a success probability.
pub fn torque_sweep(
    objects: &[&str],
    torques: &[f64],
    cfg: &GraspConfig,
    seed: u64,
    predict: &mut dyn FnMut(&GraspCapture) -> Result<f64>,
) -> Result<Vec<SweepRow>> {
    let renderer = Renderer::new(&cfg.layout, &cfg.render)?;
    let mut rows = Vec::new();
    for name in objects {
        let object = find_object(name)?;
        let rotation = select_grasp_rotation(object.aspect_ratio)?;
        for (j, &torque) in torques.iter().enumerate() {
            let state = HandState { finger_rotation: rotation, torque_fraction: torque };
            state.validate()?;
            let setup = GraspSetup {
                object: &object,
                state,
                approach_offset: (0.0, 0.0),
                yaw: 0.0,
                dz: 0.0,
                offset_mm: 0.0,
            };
            let gseed = derive_seed(seed, &[object.class_id as u64, j as u64]);
            let run = run_grasp(cfg, &renderer, &setup, gseed)?;
            rows.push(SweepRow {
                object: object.name.clone(),
                torque,
                predicted_success_prob: predict(&run.capture)?,
                actual_outcome: run.detector.success,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_torques_from_11_to_33_percent() {
        let t = sweep_torques();
        assert_eq!(t.len(), 12);
        assert!((t[0] - 0.11).abs() < 1e-12 && (t[11] - 0.33).abs() < 1e-12);
        assert!(t.windows(2).all(|w| ((w[1] - w[0]) - 0.02).abs() < 1e-12));
    }

    #[test]
    fn sweep_rows_per_object() {
        let cfg = GraspConfig { n_frames: 2, ..GraspConfig::default() };
        let rows = torque_sweep(&["Orange", "GumPot"], &[0.11, 0.33], &cfg, 1, &mut |_| Ok(0.5)).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].object, "GumPot");
    }
}
