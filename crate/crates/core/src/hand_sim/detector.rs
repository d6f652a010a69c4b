//! Post-lift check: compare held frames against pre-grasp references.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tactile_image::{ssim, GrayFrame, SsimParams};

pub const DETECTOR_FRAMES: usize = 20;
pub const DETECTOR_THRESHOLD: f64 = 0.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorResult {
    pub success: bool,
    /// Mode SSIM per sensor.
    pub scores: [f64; 3],
}

/// Mode of values quantised to two decimals; ties go to the smaller value.
pub fn quantized_mode(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("mode of an empty set"));
    }
    let mut counts = BTreeMap::new();
    for &v in values {
        if !v.is_finite() {
            return Err(invalid("non-finite similarity value"));
        }
        *counts.entry((v * 100.0).round() as i64).or_insert(0usize) += 1;
    }
    // Ascending keys, strict comparison keeps the first (smallest) on ties.
    let mut best = (i64::MAX, 0usize);
    for (&k, &c) in &counts {
        if c > best.1 {
            best = (k, c);
        }
    }
    Ok(best.0 as f64 / 100.0)
}

pub fn mode_ssim(reference: &GrayFrame, frames: &[GrayFrame]) -> Result<f64> {
    if frames.len() != DETECTOR_FRAMES {
        return Err(invalid(format!(
            "detector needs {DETECTOR_FRAMES} frames per sensor, got {}",
            frames.len()
        )));
    }
    let p = SsimParams::default();
    let values = frames.iter().map(|f| ssim(f, reference, &p)).collect::<Result<Vec<_>>>()?;
    quantized_mode(&values)
}

/// Success iff two or more sensors have mode SSIM below `threshold`.
pub fn grasp_success_detector(
    refs: &[GrayFrame; 3],
    held: &[Vec<GrayFrame>; 3],
    threshold: f64,
) -> Result<DetectorResult> {
    let mut scores = [0.0; 3];
    for k in 0..3 {
        scores[k] = mode_ssim(&refs[k], &held[k])?;
    }
    let deformed = scores.iter().filter(|&&s| s < threshold).count();
    Ok(DetectorResult { success: deformed >= 2, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_quantises_and_breaks_ties_low() {
        assert_eq!(quantized_mode(&[0.951, 0.949, 0.97]).unwrap(), 0.95);
        assert_eq!(quantized_mode(&[0.90, 0.90, 0.80, 0.80, 0.99]).unwrap(), 0.80);
        assert_eq!(quantized_mode(&[0.5]).unwrap(), 0.5);
        assert!(quantized_mode(&[]).is_err());
        assert!(quantized_mode(&[f64::NAN]).is_err());
    }

    #[test]
    fn identical_frames_are_no_contact() {
        let f = GrayFrame::from_fn(32, 32, |x, y| ((x * 7 + y * 3) % 256) as u8);
        let refs = [f.clone(), f.clone(), f.clone()];
        let held = [vec![f.clone(); 20], vec![f.clone(); 20], vec![f.clone(); 20]];
        let r = grasp_success_detector(&refs, &held, DETECTOR_THRESHOLD).unwrap();
        assert_eq!(r.scores, [1.0; 3]);
        assert!(!r.success);
    }

    #[test]
    fn wrong_frame_count_is_rejected() {
        let f = GrayFrame::filled(16, 16, 9);
        let refs = [f.clone(), f.clone(), f.clone()];
        let held = [vec![f.clone(); 19], vec![f.clone(); 20], vec![f.clone(); 20]];
        assert!(grasp_success_detector(&refs, &held, DETECTOR_THRESHOLD).is_err());
    }
}
