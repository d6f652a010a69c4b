//! The data-collection loop: plan from depth, grasp, lift, check, record.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::detector::{grasp_success_detector, DETECTOR_FRAMES, DETECTOR_THRESHOLD};
use super::objects::{find_object, SimObject};
use super::outcome::{perturbed_state, OutcomeModel};
use super::scene::{estimate_grasp, render_depth_scene, ObjectPlacement, TrayScene};
use super::{GraspPerturbation, HandState};
use crate::error::{invalid, io_err, Result};
use crate::pnm::write_pgm;
use crate::pose_estimation::select_grasp_rotation;
use crate::seed::{derive_seed, rng_for};
use crate::sensor_sim::{
    render_depth_sequence, ContactPrimitive, DeformationField, DeformationModel, PinLayout, RenderParams, Renderer,
    DEFAULT_FPS,
};
use crate::tactile_image::GrayFrame;

/// Torque used for the unperturbed classification grasps.
pub const CLASSIFICATION_TORQUE: f64 = 0.30;

const TAG_PLACE: u64 = 1;
const TAG_DEPTH: u64 = 2;
const TAG_PERTURB: u64 = 3;
const TAG_PLAN: u64 = 4;
const TAG_VIDEO: u64 = 5;
const TAG_HELD: u64 = 6;
const TAG_REF: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspConfig {
    pub layout: PinLayout,
    pub model: DeformationModel,
    pub render: RenderParams,
    pub scene: TrayScene,
    pub outcome: OutcomeModel,
    pub n_frames: usize,
    pub fps: f64,
    pub glare: bool,
    /// Sample pose and torque perturbations for every grasp.
    pub perturb: bool,
    /// Torque when not perturbed.
    pub torque: f64,
    pub detector_threshold: f64,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            layout: PinLayout::default(),
            model: DeformationModel::default(),
            render: RenderParams::default(),
            scene: TrayScene::default(),
            outcome: OutcomeModel::default(),
            n_frames: 120,
            fps: DEFAULT_FPS,
            glare: true,
            perturb: false,
            torque: CLASSIFICATION_TORQUE,
            detector_threshold: DETECTOR_THRESHOLD,
        }
    }
}

impl GraspConfig {
    pub fn perturbed() -> Self {
        Self { perturb: true, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub object: String,
    pub object_label: usize,
    pub grasp_idx: usize,
    pub hand_state: HandState,
    pub perturbation: Option<GraspPerturbation>,
    pub placement: ObjectPlacement,
    /// Per-sensor frame directories, relative to the dataset root.
    pub videos: [String; 3],
    pub n_frames: usize,
    /// Detector decision; this is the training label.
    pub success: bool,
    pub detector_ssim: [f64; 3],
    /// Hidden outcome the simulator drew, kept for auditing the detector.
    pub true_outcome: bool,
    pub success_probability: f64,
    pub seed: u64,
}

impl GraspRecord {
    pub fn frame_path(&self, sensor: usize, frame: usize) -> String {
        format!("{}/frame_{frame:04}.pgm", self.videos[sensor])
    }

    pub fn reference_path(&self, sensor: usize) -> String {
        format!("{}/ref.pgm", self.videos[sensor])
    }
}

/// Frames produced by one grasp.
#[derive(Debug, Clone)]
pub struct GraspCapture {
    pub refs: [GrayFrame; 3],
    pub videos: [Vec<GrayFrame>; 3],
    /// Frames at the top of the lift, used only by the detector.
    pub held: [Vec<GrayFrame>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub fps: f64,
    pub n_frames: usize,
    pub seed: u64,
    pub records: Vec<GraspRecord>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let path = root.join(Self::FILE_NAME);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(Self::FILE_NAME);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes references and grasp frames under `root` at the record's paths.
pub fn write_grasp(root: &Path, record: &GraspRecord, capture: &GraspCapture) -> Result<()> {
    for k in 0..3 {
        let dir = root.join(&record.videos[k]);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_pgm(&root.join(record.reference_path(k)), &capture.refs[k])?;
        for (i, f) in capture.videos[k].iter().enumerate() {
            write_pgm(&root.join(record.frame_path(k, i)), f)?;
        }
    }
    Ok(())
}

/// Per-finger indentation schedule for one grasp.
#[derive(Debug, Clone)]
struct FingerPlan {
    contact: ContactPrimitive,
    peak: f64,
    start_s: f64,
    ramp_s: f64,
    /// Fraction of the peak reached at the end of the video.
    end_fraction: f64,
    /// Indentation while lifted.
    held: f64,
}

fn torque_gain(torque: f64) -> f64 {
    (torque / CLASSIFICATION_TORQUE).powf(0.7).clamp(0.15, 1.1)
}

fn wrap_half_pi(t: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut t = t.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

struct Approach {
    /// Planar error of the hand in its own frame, mm.
    offset: (f64, f64),
    /// Object yaw relative to the hand, radians.
    yaw: f64,
    dz: f64,
}

fn plan_fingers(
    object: &SimObject,
    state: &HandState,
    approach: &Approach,
    success: bool,
    max_depth: f64,
    rng: &mut ChaCha8Rng,
) -> [FingerPlan; 3] {
    let gain = torque_gain(state.torque_fraction) * (1.0 - approach.dz / 80.0);
    let ramp_s = 1.4 * (CLASSIFICATION_TORQUE / state.torque_fraction).clamp(0.8, 3.0);
    let rot = state.finger_rotation.to_radians();
    let (ox, oy) = approach.offset;
    let mut plans: Vec<FingerPlan> = (0..3)
        .map(|k| {
            let mut contact = object.fingers[k];
            let side = if k == 0 { -1.0 } else { 1.0 };
            let spin = match k {
                1 => rot,
                2 => -rot,
                _ => 0.0,
            };
            contact.pose.x = (contact.pose.x + 0.35 * side * ox + rng.random_range(-1.5..=1.5)).clamp(-8.0, 8.0);
            contact.pose.y = (contact.pose.y + 0.15 * oy + rng.random_range(-0.8..=0.8)).clamp(-4.0, 4.0);
            contact.pose.rotation += approach.yaw + spin + rng.random_range(-0.05..=0.05);
            let peak = (contact.indentation * gain * rng.random_range(0.9..=1.1)).min(max_depth);
            FingerPlan {
                contact,
                peak,
                start_s: 0.9 + approach.dz / 20.0 * 0.4 + rng.random_range(-0.15..=0.15),
                ramp_s,
                end_fraction: rng.random_range(0.95..=1.0),
                held: 0.0,
            }
        })
        .collect();
    if success {
        for p in &mut plans {
            p.held = p.peak * 0.9;
        }
    } else if rng.random_bool(0.4) {
        // One or two fingers miss; the rest grip weakly and slip.
        let n_miss = if rng.random_bool(0.7) { 1 } else { 2 };
        let first = rng.random_range(0..3usize);
        for (j, p) in plans.iter_mut().enumerate() {
            let missed = (j + 3 - first) % 3 < n_miss;
            if missed {
                p.peak = 0.0;
            } else {
                p.peak *= rng.random_range(0.6..=0.9);
                p.end_fraction = 0.4;
            }
        }
    } else {
        for p in &mut plans {
            p.peak *= rng.random_range(0.3..=0.6);
            p.end_fraction = 0.5;
        }
    }
    if !success && rng.random_bool(0.15) {
        // Object dropped but one finger still brushes it.
        let k = rng.random_range(0..3usize);
        plans[k].held = 0.6f64.min(max_depth);
    }
    plans.try_into().unwrap_or_else(|_| unreachable!())
}

fn depth_schedule(plan: &FingerPlan, n_frames: usize, fps: f64, max_depth: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let video_end = n_frames as f64 / fps;
    let ramp_end = plan.start_s + plan.ramp_s;
    (0..n_frames)
        .map(|i| {
            let t = i as f64 / fps;
            let base = if t < plan.start_s || plan.peak <= 0.0 {
                0.0
            } else if t < ramp_end {
                let u = (t - plan.start_s) / plan.ramp_s;
                plan.peak * u * u * (3.0 - 2.0 * u)
            } else {
                let u = ((t - ramp_end) / (video_end - ramp_end).max(1e-9)).clamp(0.0, 1.0);
                plan.peak * (1.0 - u * (1.0 - plan.end_fraction))
            };
            let n: f64 = rng.sample(StandardNormal);
            if base > 0.0 {
                (base * (1.0 + 0.02 * n)).clamp(0.0, max_depth)
            } else {
                0.0
            }
        })
        .collect()
}

/// Everything needed to render one grasp, after planning.
pub(crate) struct GraspSetup<'a> {
    pub object: &'a SimObject,
    pub state: HandState,
    pub approach_offset: (f64, f64),
    pub yaw: f64,
    pub dz: f64,
    pub offset_mm: f64,
}

pub(crate) struct GraspOutcome {
    pub capture: GraspCapture,
    pub probability: f64,
    pub outcome: bool,
    pub detector: super::DetectorResult,
}

pub(crate) fn run_grasp(cfg: &GraspConfig, renderer: &Renderer, setup: &GraspSetup, gseed: u64) -> Result<GraspOutcome> {
    let mut rng = rng_for(gseed, &[TAG_PLAN]);
    let probability = cfg.outcome.probability(setup.object, setup.offset_mm, &setup.state);
    let outcome = rng.random::<f64>() < probability;
    let approach = Approach {
        offset: setup.approach_offset,
        yaw: setup.yaw,
        dz: setup.dz,
    };
    let max_depth = cfg.model.max_indentation * 0.98;
    let plans = plan_fingers(setup.object, &setup.state, &approach, outcome, max_depth, &mut rng);
    let rest = DeformationField::zero(cfg.layout.pin_count());
    let mut refs = Vec::with_capacity(3);
    let mut videos = Vec::with_capacity(3);
    let mut held = Vec::with_capacity(3);
    for (k, plan) in plans.iter().enumerate() {
        let k64 = k as u64;
        refs.push(renderer.render(&rest, cfg.glare, Some(derive_seed(gseed, &[TAG_REF, k64])))?);
        let depths = depth_schedule(plan, cfg.n_frames, cfg.fps, max_depth, &mut rng);
        videos.push(render_depth_sequence(
            renderer,
            &cfg.model,
            &plan.contact,
            &depths,
            cfg.glare,
            derive_seed(gseed, &[TAG_VIDEO, k64]),
        )?);
        held.push(render_depth_sequence(
            renderer,
            &cfg.model,
            &plan.contact,
            &[plan.held; DETECTOR_FRAMES],
            cfg.glare,
            derive_seed(gseed, &[TAG_HELD, k64]),
        )?);
    }
    let refs: [GrayFrame; 3] = refs.try_into().expect("three sensors");
    let videos: [Vec<GrayFrame>; 3] = videos.try_into().expect("three sensors");
    let held: [Vec<GrayFrame>; 3] = held.try_into().expect("three sensors");
    let detector = grasp_success_detector(&refs, &held, cfg.detector_threshold)?;
    Ok(GraspOutcome {
        capture: GraspCapture { refs, videos, held },
        probability,
        outcome,
        detector,
    })
}

/// Runs `num_grasps` grasps on one object. Each grasp is handed to `sink`
/// with its frames, then the frames are dropped; the records are returned.
///
/// The object is re-placed only after the detector reports success, as a
/// failed grasp leaves it where it was.
pub fn collect_grasp_data(
    object_name: &str,
    num_grasps: usize,
    cfg: &GraspConfig,
    seed: u64,
    sink: &mut dyn FnMut(&GraspRecord, &GraspCapture) -> Result<()>,
) -> Result<Vec<GraspRecord>> {
    let object = find_object(object_name)?;
    if num_grasps == 0 {
        return Err(invalid("num_grasps must be at least 1"));
    }
    if cfg.n_frames == 0 || !(cfg.fps > 0.0) {
        return Err(invalid("grasp videos need a positive frame count and rate"));
    }
    let renderer = Renderer::new(&cfg.layout, &cfg.render)?;
    let object_seed = derive_seed(seed, &[object.class_id as u64]);
    let mut placement = cfg.scene.random_placement(&object, derive_seed(object_seed, &[TAG_PLACE]));
    let mut records = Vec::with_capacity(num_grasps);
    for i in 0..num_grasps {
        let gseed = derive_seed(object_seed, &[i as u64]);
        let depth = render_depth_scene(&cfg.scene, &object, &placement, derive_seed(gseed, &[TAG_DEPTH]))?;
        let (pose, target) = estimate_grasp(&cfg.scene, &depth)?;
        let (perturbation, state) = if cfg.perturb {
            let (p, s) = perturbed_state(derive_seed(gseed, &[TAG_PERTURB]));
            (Some(p), s)
        } else {
            let rotation = select_grasp_rotation(pose.aspect_ratio)?;
            (None, HandState { finger_rotation: rotation, torque_fraction: cfg.torque })
        };
        state.validate()?;
        let (dx, dy, dz, dtheta) = perturbation.map_or((0.0, 0.0, 0.0, 0.0), |p| (p.dx, p.dy, p.dz, p.dtheta));
        let hand = (target.x + dx, target.y + dy);
        let theta = target.theta + dtheta.to_radians();
        let err = (hand.0 - placement.x, hand.1 - placement.y);
        let (sin, cos) = theta.sin_cos();
        let setup = GraspSetup {
            object: &object,
            state,
            approach_offset: (cos * err.0 + sin * err.1, -sin * err.0 + cos * err.1),
            yaw: wrap_half_pi(placement.yaw - theta),
            dz,
            offset_mm: err.0.hypot(err.1),
        };
        let run = run_grasp(cfg, &renderer, &setup, gseed)?;
        let videos = [1, 2, 3].map(|k| format!("{}/{i}/sensor{k}", object.name));
        let record = GraspRecord {
            object: object.name.clone(),
            object_label: object.class_id,
            grasp_idx: i,
            hand_state: state,
            perturbation,
            placement,
            videos,
            n_frames: cfg.n_frames,
            success: run.detector.success,
            detector_ssim: run.detector.scores,
            true_outcome: run.outcome,
            success_probability: run.probability,
            seed: gseed,
        };
        sink(&record, &run.capture)?;
        if record.success {
            placement = cfg.scene.random_placement(&object, derive_seed(gseed, &[TAG_PLACE]));
        }
        records.push(record);
    }
    Ok(records)
}
