//! Rectangular optical fingertip: pin geometry, contact deformation and rendering.

mod contact;
mod layout;
mod render;
mod video;

pub use contact::{
    apply_contact, ContactPose, ContactPrimitive, ContactShape, DeformationField, DeformationModel,
};
pub use layout::{rest_pin_positions, PinLayout};
pub use render::{render_tactile_image, RenderParams, Renderer};
pub use video::{render_depth_sequence, simulate_grasp_video, ContactTrajectory, RampProfile, DEFAULT_FPS};
