pub mod error;
pub mod experiments;
pub mod hand_sim;
pub mod learn;
pub mod pnm;
pub mod pose_estimation;
pub mod seed;
pub mod sensor_sim;
pub mod tactile_image;

pub use error::{Error, Result};
