use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tactile_image::{
    abs_pixel_diff, contact_index_from_series, crop, default_crop_region, downsample, GrayFrame, CONTACT_FRACTION,
    NET_FRAME_SIZE,
};

/// Frames per network input sequence.
pub const SEQUENCE_FRAMES: usize = 8;
/// Gap between consecutive frames of a sequence.
pub const SEQUENCE_STRIDE: usize = 10;
/// Positive offsets tried after the contact frame.
pub const SEQUENCE_OFFSETS: usize = 10;

/// Identifies a grasp video within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraspId {
    pub object_label: usize,
    pub grasp_idx: usize,
}

/// Frame indices `{c+k, c+k+10, ..., c+k+70}` for every offset `k` that fits
/// in a video of `len` frames.
pub fn sequence_indices(contact: usize, len: usize) -> Result<Vec<[usize; SEQUENCE_FRAMES]>> {
    let span = (SEQUENCE_FRAMES - 1) * SEQUENCE_STRIDE;
    let out: Vec<_> = (0..SEQUENCE_OFFSETS)
        .filter(|k| contact + k + span < len)
        .map(|k| std::array::from_fn(|j| contact + k + j * SEQUENCE_STRIDE))
        .collect();
    if out.is_empty() {
        return Err(invalid(format!(
            "video of {len} frames is too short for a sequence after contact frame {contact}"
        )));
    }
    Ok(out)
}

/// Mean over sensors of each frame's absolute difference from its reference.
pub fn sensor_mean_deformation(videos: &[Vec<GrayFrame>], refs: &[GrayFrame]) -> Result<Vec<f64>> {
    let len = videos.first().map_or(0, Vec::len);
    if videos.is_empty() || videos.len() != refs.len() || videos.iter().any(|v| v.len() != len) {
        return Err(invalid("sensor videos must be non-empty, equally long and have one reference each"));
    }
    (0..len)
        .map(|i| {
            let mut sum = 0.0;
            for (v, r) in videos.iter().zip(refs) {
                sum += abs_pixel_diff(&v[i], r)?;
            }
            Ok(sum / videos.len() as f64)
        })
        .collect()
}

fn shrink(frame: &GrayFrame) -> Result<GrayFrame> {
    let region = default_crop_region(frame.width(), frame.height())
        .ok_or_else(|| invalid(format!("{}x{} frame too small to crop", frame.width(), frame.height())))?;
    downsample(&crop(frame, region)?, NET_FRAME_SIZE.0, NET_FRAME_SIZE.1)
}

/// The sequences of one grasp, kept per sensor so any subset of sensors
/// can be concatenated later.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspSequences {
    pub id: GraspId,
    pub contact_index: usize,
    pub frame_indices: Vec<[usize; SEQUENCE_FRAMES]>,
    /// `blocks[k][s]` holds sample `k` of sensor `s`: 8 frames of 40x60.
    pub blocks: Vec<Vec<Vec<u8>>>,
}

impl GraspSequences {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sensors(&self) -> usize {
        self.blocks.first().map_or(0, Vec::len)
    }

    /// Sample `k` with the given sensors side by side: `8 x 60 x (40*|subset|)`.
    pub fn sample(&self, k: usize, subset: &[usize]) -> Result<Vec<u8>> {
        let blocks = self.blocks.get(k).ok_or_else(|| invalid(format!("no sample {k}")))?;
        if subset.is_empty() || subset.iter().any(|&s| s >= blocks.len()) {
            return Err(invalid(format!("sensor subset {subset:?} invalid for {} sensors", blocks.len())));
        }
        let (w, h) = NET_FRAME_SIZE;
        let mut out = Vec::with_capacity(SEQUENCE_FRAMES * h * w * subset.len());
        for t in 0..SEQUENCE_FRAMES {
            for y in 0..h {
                for &s in subset {
                    let at = (t * h + y) * w;
                    out.extend_from_slice(&blocks[s][at..at + w]);
                }
            }
        }
        Ok(out)
    }

    /// Sample `k` as 8 concatenated frames.
    pub fn sample_frames(&self, k: usize, subset: &[usize]) -> Result<Vec<GrayFrame>> {
        let data = self.sample(k, subset)?;
        let (w, h) = (NET_FRAME_SIZE.0 * subset.len(), NET_FRAME_SIZE.1);
        data.chunks(w * h).map(|c| GrayFrame::new(w, h, c.to_vec())).collect()
    }
}

/// Up to ten 8-frame sequences taken every 10th frame after first contact,
/// each frame cropped, downsampled and kept per sensor. Fewer samples are
/// returned when the video is too short for every offset.
pub fn extract_sequences(id: GraspId, videos: &[Vec<GrayFrame>], refs: &[GrayFrame]) -> Result<GraspSequences> {
    let series = sensor_mean_deformation(videos, refs)?;
    let contact = contact_index_from_series(&series, CONTACT_FRACTION)?;
    let frame_indices = sequence_indices(contact, series.len())?;
    let first = frame_indices[0][0];
    let last = frame_indices[frame_indices.len() - 1][SEQUENCE_FRAMES - 1];
    let small: Vec<Vec<GrayFrame>> = videos
        .iter()
        .map(|v| v[first..=last].iter().map(shrink).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let blocks = frame_indices
        .iter()
        .map(|idx| {
            small
                .iter()
                .map(|sensor| idx.iter().flat_map(|&i| sensor[i - first].data().iter().copied()).collect())
                .collect()
        })
        .collect();
    Ok(GraspSequences { id, contact_index: contact, frame_indices, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tactile_image::preprocess_step;

    #[test]
    fn full_and_truncated_offsets() {
        let all = sequence_indices(25, 120).unwrap();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], [25, 35, 45, 55, 65, 75, 85, 95]);
        assert_eq!(all[9][7], 104);
        assert_eq!(sequence_indices(25, 96).unwrap().len(), 1);
        assert!(sequence_indices(25, 95).is_err());
    }

    fn video(len: usize, contact: usize, seed: u8) -> (Vec<GrayFrame>, GrayFrame) {
        let rest = GrayFrame::from_fn(320, 240, |x, y| ((x * 3 + y * 5) % 200) as u8 + seed);
        let frames = (0..len)
            .map(|i| {
                let bump = if i >= contact { 40 + (i - contact) as u8 / 4 } else { 0 };
                GrayFrame::from_fn(320, 240, |x, y| rest.get(x, y).saturating_add(if x > 100 { bump } else { 0 }))
            })
            .collect();
        (frames, rest)
    }

    #[test]
    fn samples_match_preprocess_step() {
        let mut videos = Vec::new();
        let mut refs = Vec::new();
        for s in 0..3 {
            let (v, r) = video(100, 12, s * 7);
            videos.push(v);
            refs.push(r);
        }
        let g = extract_sequences(GraspId { object_label: 0, grasp_idx: 0 }, &videos, &refs).unwrap();
        assert_eq!(g.contact_index, 12);
        assert_eq!(g.len(), 10);
        let frames = g.sample_frames(2, &[0, 1, 2]).unwrap();
        assert_eq!(frames.len(), 8);
        for (j, f) in frames.iter().enumerate() {
            let i = 12 + 2 + 10 * j;
            let want = preprocess_step(&[&videos[0][i], &videos[1][i], &videos[2][i]]).unwrap();
            assert_eq!(f, &want);
            assert_eq!(f.dims(), (120, 60));
        }
        let sub = g.sample_frames(0, &[0, 2]).unwrap();
        assert_eq!(sub[0].dims(), (80, 60));
    }

    #[test]
    fn indices_have_gap_ten() {
        for c in 0..30 {
            for idx in sequence_indices(c, 120).unwrap() {
                assert!(idx.windows(2).all(|w| w[1] - w[0] == SEQUENCE_STRIDE));
            }
        }
    }
}
