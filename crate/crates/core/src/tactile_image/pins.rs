use serde::{Deserialize, Serialize};

use super::GrayFrame;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PinDetection {
    /// Intensity-weighted centroids in pixel coordinates (pixel centres at integers).
    pub centroids: Vec<(f64, f64)>,
    /// Component areas in pixels, parallel to `centroids`.
    pub areas: Vec<usize>,
}

impl PinDetection {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinDetectorParams {
    pub threshold: u8,
    pub min_area: usize,
    pub max_area: usize,
}

impl Default for PinDetectorParams {
    fn default() -> Self {
        Self {
            threshold: 150,
            min_area: 6,
            max_area: 150,
        }
    }
}

/// Threshold, label 4-connected components and keep those whose area is in
/// `[min_area, max_area]`. Output is sorted by `(y, x)`.
pub fn detect_pins(frame: &GrayFrame, threshold: u8, min_area: usize, max_area: usize) -> Result<PinDetection> {
    if threshold == 0 || threshold == 255 {
        return Err(invalid(format!("pin threshold must be in (0, 255), got {threshold}")));
    }
    let (w, h) = frame.dims();
    let data = frame.data();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut found: Vec<((f64, f64), usize)> = Vec::new();

    for start in 0..w * h {
        if seen[start] || data[start] < threshold {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut mass, mut mx, mut my) = (0usize, 0f64, 0f64, 0f64);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let v = data[i] as f64;
            area += 1;
            mass += v;
            mx += v * x as f64;
            my += v * y as f64;
            let mut visit = |j: usize| {
                if !seen[j] && data[j] >= threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if (min_area..=max_area).contains(&area) {
            found.push(((mx / mass, my / mass), area));
        }
    }

    found.sort_by(|a, b| (a.0 .1, a.0 .0).partial_cmp(&(b.0 .1, b.0 .0)).unwrap());
    let (centroids, areas) = found.into_iter().unzip();
    Ok(PinDetection { centroids, areas })
}

pub fn detect_pins_with(frame: &GrayFrame, p: &PinDetectorParams) -> Result<PinDetection> {
    detect_pins(frame, p.threshold, p.min_area, p.max_area)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(cx: f64, cy: f64, sigma: f64) -> GrayFrame {
        GrayFrame::from_fn(200, 120, |x, y| {
            let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            (220.0 * (-r2 / (2.0 * sigma * sigma)).exp()).round() as u8
        })
    }

    #[test]
    fn blank_frame_has_no_pins() {
        let d = detect_pins(&GrayFrame::filled(50, 50, 20), 100, 1, 1000).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn gaussian_blob_centroid() {
        let d = detect_pins(&blob(100.0, 50.0, 2.5), 100, 3, 200).unwrap();
        assert_eq!(d.len(), 1);
        let (x, y) = d.centroids[0];
        assert!((x - 100.0).abs() < 0.5 && (y - 50.0).abs() < 0.5, "({x}, {y})");
    }

    #[test]
    fn area_filter_and_threshold_bounds() {
        let f = blob(100.0, 50.0, 2.5);
        assert!(detect_pins(&f, 100, 500, 1000).unwrap().is_empty());
        assert!(detect_pins(&f, 0, 1, 10).is_err());
        assert!(detect_pins(&f, 255, 1, 10).is_err());
    }

    #[test]
    fn components_are_four_connected_and_sorted() {
        // Two diagonal pixels are separate components.
        let mut f = GrayFrame::filled(6, 6, 0);
        f.set(4, 1, 200);
        f.set(1, 1, 200);
        f.set(2, 2, 200);
        let d = detect_pins(&f, 100, 1, 10).unwrap();
        assert_eq!(d.centroids, vec![(1.0, 1.0), (4.0, 1.0), (2.0, 2.0)]);
    }
}
