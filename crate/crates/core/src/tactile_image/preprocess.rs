use super::{GrayFrame, Rect};
use crate::error::{invalid, Result};

/// Captured tactile frame size.
pub const CAPTURE_SIZE: (usize, usize) = (320, 240);
/// Size of the central region kept after cropping.
pub const CROP_SIZE: (usize, usize) = (160, 220);
/// Per-sensor network input size.
pub const NET_FRAME_SIZE: (usize, usize) = (40, 60);
/// Fraction of the maximum deformation that marks first contact.
pub const CONTACT_FRACTION: f64 = 0.25;

/// Mean absolute per-pixel difference.
pub fn abs_pixel_diff(frame: &GrayFrame, reference: &GrayFrame) -> Result<f64> {
    frame.ensure_same_dims(reference)?;
    let total: u64 = frame
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .sum();
    Ok(total as f64 / frame.data().len() as f64)
}

/// Deformation series of a video against a reference frame.
pub fn deformation_series(video: &[GrayFrame], reference: &GrayFrame) -> Result<Vec<f64>> {
    video.iter().map(|f| abs_pixel_diff(f, reference)).collect()
}

/// First index whose deformation reaches `fraction` of the series maximum.
/// A series with zero maximum yields index 0.
pub fn contact_index_from_series(series: &[f64], fraction: f64) -> Result<usize> {
    if series.is_empty() {
        return Err(invalid("deformation series is empty"));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid(format!("contact fraction {fraction} outside [0, 1]")));
    }
    let max = series.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Ok(0);
    }
    let threshold = fraction * max;
    Ok(series.iter().position(|&d| d >= threshold).unwrap_or(0))
}

/// Index of the first frame at 25% of the video's maximum deformation.
pub fn contact_frame_index(video: &[GrayFrame], reference: &GrayFrame) -> Result<usize> {
    if video.is_empty() {
        return Err(invalid("video has no frames"));
    }
    contact_index_from_series(&deformation_series(video, reference)?, CONTACT_FRACTION)
}

pub fn crop(frame: &GrayFrame, region: Rect) -> Result<GrayFrame> {
    if !region.fits(frame.width(), frame.height()) {
        return Err(invalid(format!(
            "crop region {region:?} outside {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    let mut data = Vec::with_capacity(region.width * region.height);
    for y in region.y..region.y + region.height {
        data.extend_from_slice(&frame.row(y)[region.x..region.x + region.width]);
    }
    GrayFrame::new(region.width, region.height, data)
}

/// Centred 160x220 crop of a 320x240 capture (or the same size centred in any frame).
pub fn default_crop_region(frame_w: usize, frame_h: usize) -> Option<Rect> {
    Rect::centered(frame_w, frame_h, CROP_SIZE.0, CROP_SIZE.1, (0, 0))
}

/// Overlap weights of source pixels for each output bin along one axis.
fn bin_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let mut w = Vec::new();
            let mut j = lo.floor() as usize;
            while (j as f64) < hi && j < src {
                let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((j, overlap));
                }
                j += 1;
            }
            w
        })
        .collect()
}

/// Area-average resampling with fractional bin weights.
pub fn downsample(frame: &GrayFrame, target_w: usize, target_h: usize) -> Result<GrayFrame> {
    if target_w == 0 || target_h == 0 {
        return Err(invalid("downsample target dimensions must be positive"));
    }
    if target_w > frame.width() || target_h > frame.height() {
        return Err(invalid(format!(
            "downsample target {target_w}x{target_h} exceeds source {}x{}",
            frame.width(),
            frame.height()
        )));
    }
    let wx = bin_weights(frame.width(), target_w);
    let wy = bin_weights(frame.height(), target_h);
    let area = (frame.width() as f64 / target_w as f64) * (frame.height() as f64 / target_h as f64);
    let mut out = Vec::with_capacity(target_w * target_h);
    // Horizontal pass per source row is reused across output rows.
    let rows: Vec<Vec<f64>> = (0..frame.height())
        .map(|y| {
            let row = frame.row(y);
            wx.iter()
                .map(|bin| bin.iter().map(|&(j, w)| row[j] as f64 * w).sum())
                .collect()
        })
        .collect();
    for bin_y in &wy {
        for ox in 0..target_w {
            let s: f64 = bin_y.iter().map(|&(j, w)| rows[j][ox] * w).sum();
            out.push((s / area).round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayFrame::new(target_w, target_h, out)
}

/// Side-by-side concatenation, left to right in the given order.
pub fn concat_horizontal(frames: &[&GrayFrame]) -> Result<GrayFrame> {
    let first = frames.first().ok_or_else(|| invalid("no frames to concatenate"))?;
    for f in frames {
        first.ensure_same_dims(f)?;
    }
    let (w, h) = first.dims();
    let mut data = Vec::with_capacity(w * h * frames.len());
    for y in 0..h {
        for f in frames {
            data.extend_from_slice(f.row(y));
        }
    }
    GrayFrame::new(w * frames.len(), h, data)
}

/// Crop, downsample and concatenate one time step of the sensors' captures.
pub fn preprocess_step(frames: &[&GrayFrame]) -> Result<GrayFrame> {
    let small = frames
        .iter()
        .map(|f| {
            let region = default_crop_region(f.width(), f.height())
                .ok_or_else(|| invalid(format!("{}x{} frame too small to crop", f.width(), f.height())))?;
            downsample(&crop(f, region)?, NET_FRAME_SIZE.0, NET_FRAME_SIZE.1)
        })
        .collect::<Result<Vec<_>>>()?;
    concat_horizontal(&small.iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_diff_extremes() {
        let z = GrayFrame::filled(8, 4, 0);
        let f = GrayFrame::filled(8, 4, 255);
        assert_eq!(abs_pixel_diff(&z, &z).unwrap(), 0.0);
        assert_eq!(abs_pixel_diff(&z, &f).unwrap(), 255.0);
        assert!(abs_pixel_diff(&z, &GrayFrame::filled(4, 8, 0)).is_err());
    }

    #[test]
    fn pixel_diff_of_ramp_is_its_mean() {
        let ramp = GrayFrame::from_fn(16, 8, |x, y| (x * 8 + y * 3) as u8);
        let z = GrayFrame::filled(16, 8, 0);
        let mut sum = 0u64;
        for y in 0..8 {
            for x in 0..16 {
                sum += (x * 8 + y * 3) as u64;
            }
        }
        assert_eq!(abs_pixel_diff(&ramp, &z).unwrap(), sum as f64 / 128.0);
    }

    #[test]
    fn contact_index_examples() {
        let linear: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(contact_index_from_series(&linear, 0.25).unwrap(), 25);
        assert_eq!(contact_index_from_series(&[0.0, 10.0, 40.0, 90.0], 0.25).unwrap(), 2);
        assert_eq!(contact_index_from_series(&[0.0; 5], 0.25).unwrap(), 0);
        assert!(contact_index_from_series(&[], 0.25).is_err());
    }

    #[test]
    fn contact_index_on_identical_video_is_zero() {
        let f = GrayFrame::filled(10, 10, 40);
        let video = vec![f.clone(); 6];
        assert_eq!(contact_frame_index(&video, &f).unwrap(), 0);
        assert!(contact_frame_index(&[], &f).is_err());
    }

    #[test]
    fn default_crop_is_centered_160_by_220() {
        let frame = GrayFrame::from_fn(320, 240, |x, y| ((x + y) % 256) as u8);
        let region = default_crop_region(320, 240).unwrap();
        assert_eq!(region, Rect::new(80, 10, 160, 220));
        let c = crop(&frame, region).unwrap();
        assert_eq!(c.dims(), (160, 220));
        assert_eq!(c.get(0, 0), frame.get(80, 10));
        assert_eq!(crop(&frame, Rect::new(0, 0, 320, 240)).unwrap(), frame);
        assert!(crop(&frame, Rect::new(200, 0, 160, 240)).is_err());
    }

    #[test]
    fn checkerboard_inner_crop() {
        let board = GrayFrame::from_fn(4, 4, |x, y| if (x + y) % 2 == 0 { 255 } else { 0 });
        let inner = crop(&board, Rect::new(1, 1, 2, 2)).unwrap();
        assert_eq!(inner.data(), &[255, 0, 0, 255]);
    }

    #[test]
    fn downsample_examples() {
        let c = GrayFrame::filled(160, 220, 37);
        let d = downsample(&c, 40, 60).unwrap();
        assert_eq!(d.dims(), (40, 60));
        assert!(d.data().iter().all(|&v| v == 37));
        let half = GrayFrame::new(2, 2, vec![0, 0, 255, 255]).unwrap();
        assert_eq!(downsample(&half, 1, 1).unwrap().data(), &[128]);
        assert!(downsample(&c, 0, 10).is_err());
        assert!(downsample(&c, 200, 10).is_err());
    }

    #[test]
    fn fractional_bins_weight_boundary_pixels() {
        // 3 -> 2: bins [0, 1.5) and [1.5, 3).
        let f = GrayFrame::new(3, 1, vec![0, 90, 180]).unwrap();
        let d = downsample(&f, 2, 1).unwrap();
        // (0 + 0.5*90)/1.5 = 30, (0.5*90 + 180)/1.5 = 150
        assert_eq!(d.data(), &[30, 150]);
    }

    #[test]
    fn concat_places_sensors_left_to_right() {
        let frames: Vec<_> = [10u8, 20, 30].iter().map(|&v| GrayFrame::filled(40, 60, v)).collect();
        let out = concat_horizontal(&frames.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(out.dims(), (120, 60));
        for y in 0..60 {
            assert!(out.row(y)[..40].iter().all(|&v| v == 10));
            assert!(out.row(y)[40..80].iter().all(|&v| v == 20));
            assert!(out.row(y)[80..].iter().all(|&v| v == 30));
        }
        let odd = GrayFrame::filled(41, 60, 0);
        assert!(concat_horizontal(&[&frames[0], &odd]).is_err());
        assert!(concat_horizontal(&[]).is_err());
    }

    #[test]
    fn pipeline_shapes() {
        let f = GrayFrame::filled(320, 240, 50);
        let out = preprocess_step(&[&f, &f, &f]).unwrap();
        assert_eq!(out.dims(), (120, 60));
    }
}
