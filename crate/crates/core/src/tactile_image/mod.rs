//! Deterministic tactile image primitives.

mod frame;
mod pins;
mod preprocess;
mod ssim;

pub use frame::{GrayFrame, Rect};
pub use pins::{detect_pins, detect_pins_with, PinDetection, PinDetectorParams};
pub use preprocess::{
    abs_pixel_diff, concat_horizontal, contact_frame_index, contact_index_from_series, crop,
    default_crop_region, deformation_series, downsample, preprocess_step, CAPTURE_SIZE,
    CONTACT_FRACTION, CROP_SIZE, NET_FRAME_SIZE,
};
pub use ssim::{ssim, ssim_map, SsimParams};
