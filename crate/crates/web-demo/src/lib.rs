//! WebAssembly bindings for the browser demo in `www/`.

use tacgrasp::hand_sim::DETECTOR_THRESHOLD;
use tacgrasp::pose_estimation::{pose_from_moments, select_grasp_rotation, DepthImage, Mask};
use tacgrasp::sensor_sim::{
    render_depth_sequence, ContactPose, ContactPrimitive, ContactShape, DeformationModel, PinLayout, RenderParams,
    Renderer,
};
use tacgrasp::tactile_image::{preprocess_step, ssim, GrayFrame, SsimParams};
use wasm_bindgen::prelude::*;

const NOISE_SEED: u64 = 7;
const REST_SEED: u64 = 8;

fn js_err(e: tacgrasp::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn shape(kind: &str, size: f64) -> Result<ContactShape, JsError> {
    Ok(match kind {
        "sphere" => ContactShape::Sphere { radius: size },
        "box" => ContactShape::Box { length: size, width: size * 0.6 },
        "cylinder" => ContactShape::Cylinder { radius: size * 0.5, length: size * 2.0 },
        "edge" => ContactShape::Edge { width: size * 0.3 },
        other => return Err(JsError::new(&format!("unknown shape {other:?}"))),
    })
}

/// Grey frame expanded to RGBA for `ImageData`.
fn rgba(f: &GrayFrame) -> Vec<u8> {
    f.data().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

/// One sensor: the rest image and the image under a contact.
#[wasm_bindgen]
pub struct TactileView {
    rest: GrayFrame,
    pressed: GrayFrame,
}

#[wasm_bindgen]
impl TactileView {
    /// Renders `kind` ("sphere", "box", "cylinder" or "edge") of size `size`
    /// mm pressed `depth` mm into the skin at (`x`, `y`) mm, rotated
    /// `rotation_deg`.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, size: f64, depth: f64, x: f64, y: f64, rotation_deg: f64) -> Result<TactileView, JsError> {
        let renderer = Renderer::new(&PinLayout::default(), &RenderParams::default()).map_err(js_err)?;
        let model = DeformationModel::default();
        let contact = ContactPrimitive {
            shape: shape(kind, size)?,
            pose: ContactPose { x, y, rotation: rotation_deg.to_radians() },
            indentation: 0.0,
        };
        let depth = depth.clamp(0.0, model.max_indentation);
        let mut rest = render_depth_sequence(&renderer, &model, &contact, &[0.0], false, REST_SEED).map_err(js_err)?;
        let mut pressed = render_depth_sequence(&renderer, &model, &contact, &[depth], false, NOISE_SEED).map_err(js_err)?;
        Ok(TactileView { rest: rest.remove(0), pressed: pressed.remove(0) })
    }

    pub fn width(&self) -> usize {
        self.pressed.width()
    }

    pub fn height(&self) -> usize {
        self.pressed.height()
    }

    pub fn pressed_rgba(&self) -> Vec<u8> {
        rgba(&self.pressed)
    }

    pub fn rest_rgba(&self) -> Vec<u8> {
        rgba(&self.rest)
    }

    /// Cropped and downsampled network input, 40x60.
    pub fn network_input_rgba(&self) -> Result<Vec<u8>, JsError> {
        Ok(rgba(&preprocess_step(&[&self.pressed]).map_err(js_err)?))
    }

    /// SSIM between the pressed and rest images.
    pub fn ssim_to_rest(&self) -> Result<f64, JsError> {
        ssim(&self.pressed, &self.rest, &SsimParams::default()).map_err(js_err)
    }

    /// Whether the detector would count this sensor as deformed.
    pub fn in_contact(&self) -> Result<bool, JsError> {
        Ok(self.ssim_to_rest()? < DETECTOR_THRESHOLD)
    }
}

#[wasm_bindgen]
pub fn detector_threshold() -> f64 {
    DETECTOR_THRESHOLD
}

/// Best-fit pose of a `length` x `width` px rectangle rotated `angle_deg`
/// and the finger rotation chosen for its aspect ratio.
#[wasm_bindgen]
pub struct PoseView {
    mask: Vec<u8>,
    size: usize,
    pub orientation_deg: f64,
    pub aspect_ratio: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub grasp_rotation_deg: f64,
}

#[wasm_bindgen]
impl PoseView {
    #[wasm_bindgen(constructor)]
    pub fn new(length: f64, width: f64, angle_deg: f64) -> Result<PoseView, JsError> {
        let size = 200;
        let c = size as f64 / 2.0;
        let (s, co) = angle_deg.to_radians().sin_cos();
        // Image y points down; negate so positive angles turn counter-clockwise on screen.
        let mask = Mask::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - c, c - y as f64);
            (dx * co + dy * s).abs() <= length / 2.0 && (-dx * s + dy * co).abs() <= width / 2.0
        });
        let depth = DepthImage::new(size, size, vec![600; size * size]).map_err(js_err)?;
        let pose = pose_from_moments(&mask, &depth).map_err(js_err)?;
        let grasp = select_grasp_rotation(pose.aspect_ratio).map_err(js_err)?;
        let pixels = (0..size * size).map(|i| if mask.get(i % size, i / size) { 255 } else { 0 }).collect();
        Ok(PoseView {
            mask: pixels,
            size,
            orientation_deg: -pose.theta.to_degrees(),
            aspect_ratio: pose.aspect_ratio,
            major_axis: pose.major_axis,
            minor_axis: pose.minor_axis,
            grasp_rotation_deg: grasp,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mask_rgba(&self) -> Vec<u8> {
        self.mask.iter().flat_map(|&v| [v, v / 2, 0, 255]).collect()
    }
}
