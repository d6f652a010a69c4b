use serde::{Deserialize, Serialize};

use super::protocol::{grasp_prediction, ALL_SENSORS};
use super::report::spearman;
use crate::error::Result;
use crate::hand_sim::{sweep_torques, torque_sweep, GraspConfig, SweepRow};
use crate::learn::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueSweepResult {
    pub rows: Vec<SweepRow>,
    /// Spearman correlation of predicted success with torque, per object;
    /// `None` when the predictions are constant.
    pub spearman: Vec<(String, Option<f64>)>,
}

/// Twelve fixed-pose grasps per object at rising torque, scored by the
/// success network.
pub fn run_torque_sweep(net: &Network<f32>, objects: &[&str], cfg: &GraspConfig, seed: u64) -> Result<TorqueSweepResult> {
    let rows = torque_sweep(objects, &sweep_torques(), cfg, seed, &mut |cap| {
        Ok(grasp_prediction(net, cap, &ALL_SENSORS)?[1] as f64)
    })?;
    let spearman = objects
        .iter()
        .map(|o| {
            let (t, p): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.object.eq_ignore_ascii_case(o))
                .map(|r| (r.torque, r.predicted_success_prob))
                .unzip();
            (o.to_string(), spearman(&t, &p))
        })
        .collect();
    Ok(TorqueSweepResult { rows, spearman })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("object,torque,predicted_success_prob,actual_outcome\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.object, r.torque, r.predicted_success_prob, r.actual_outcome as u8));
    }
    s
}
