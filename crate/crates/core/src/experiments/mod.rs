//! Experiment protocols on simulated grasps: sequence extraction, splits,
//! the three tactile tests, the torque sweep and report output.

mod data;
mod protocol;
mod report;
mod sequences;
mod split;
pub mod svg;
mod sweep;

pub use data::{compact, grasp_id, load_grasp_set, missing_paths, simulate_grasp_set, GraspSet};
pub use protocol::{
    build_dataset, check_network, classification_train_config, evaluate_model, evaluate_network, paper_success_train_config, grasp_prediction, input_shape, predictions,
    run_grasp_success_prediction, run_item_classification, run_online_classification, run_sensitivity,
    run_vote_ensemble, sensor_subsets, split_for, subset_name, success_train_config, train_model, vote,
    ExperimentConfig, OnlineResult, DESK_MAX_EPOCHS, DESK_SAMPLES_PER_EPOCH, Run, SensitivityResult, SensitivityRow, Task, TrainedModel, ALL_SENSORS,
};
pub use report::{config_hash, ranks, spearman, write_file, ExperimentReport};
pub use sequences::{
    extract_sequences, sensor_mean_deformation, sequence_indices, GraspId, GraspSequences, SEQUENCE_FRAMES,
    SEQUENCE_OFFSETS, SEQUENCE_STRIDE,
};
pub use split::{split_grasps, DatasetSplit, TRAIN_FRACTION};
pub use sweep::{run_torque_sweep, sweep_csv, TorqueSweepResult};
