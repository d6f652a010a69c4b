use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Pin grid of a rectangular fingertip sensor. `x` runs along the 40 mm
/// long axis (the 10-pin rows), `y` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinLayout {
    pub rows: usize,
    pub cols: usize,
    /// Centre spacing, mm.
    pub pitch: f64,
    pub pin_radius: f64,
    /// Surface extent (long, short), mm.
    pub surface: (f64, f64),
}

impl Default for PinLayout {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 10,
            pitch: 3.0,
            pin_radius: 0.6,
            surface: (40.0, 20.0),
        }
    }
}

impl PinLayout {
    pub fn pin_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid("pin layout needs at least one row and column"));
        }
        if !(self.pin_radius > 0.0 && self.pitch > 2.0 * self.pin_radius) {
            return Err(invalid(format!(
                "pitch {} must exceed the pin diameter {}",
                self.pitch,
                2.0 * self.pin_radius
            )));
        }
        let half_x = (self.cols - 1) as f64 * self.pitch / 2.0 + self.pin_radius;
        let half_y = (self.rows - 1) as f64 * self.pitch / 2.0 + self.pin_radius;
        if half_x > self.surface.0 / 2.0 || half_y > self.surface.1 / 2.0 {
            return Err(invalid("pin grid does not fit inside the sensor surface"));
        }
        Ok(())
    }
}

/// Rest positions in mm, centred on the surface, row-major.
pub fn rest_pin_positions(layout: &PinLayout) -> Vec<(f64, f64)> {
    let cx = (layout.cols - 1) as f64 / 2.0;
    let cy = (layout.rows - 1) as f64 / 2.0;
    (0..layout.rows)
        .flat_map(|r| {
            (0..layout.cols).map(move |c| ((c as f64 - cx) * layout.pitch, (r as f64 - cy) * layout.pitch))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_geometry() {
        let layout = PinLayout::default();
        layout.validate().unwrap();
        let pins = rest_pin_positions(&layout);
        assert_eq!(pins.len(), 30);
        let max_x = pins.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        let min_x = pins.iter().map(|p| p.0).fold(f64::MAX, f64::min);
        let max_y = pins.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let min_y = pins.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        assert_eq!((min_x, max_x), (-13.5, 13.5));
        assert_eq!((min_y, max_y), (-3.0, 3.0));
        let mut min_d = f64::MAX;
        for (i, a) in pins.iter().enumerate() {
            for b in &pins[i + 1..] {
                min_d = min_d.min((a.0 - b.0).hypot(a.1 - b.1));
            }
        }
        assert_eq!(min_d, 3.0);
    }

    #[test]
    fn single_pin_sits_at_origin() {
        let layout = PinLayout { rows: 1, cols: 1, ..Default::default() };
        assert_eq!(rest_pin_positions(&layout), vec![(0.0, 0.0)]);
    }

    #[test]
    fn invalid_layouts() {
        assert!(PinLayout { pitch: 1.0, ..Default::default() }.validate().is_err());
        assert!(PinLayout { cols: 20, ..Default::default() }.validate().is_err());
        assert!(PinLayout { rows: 0, ..Default::default() }.validate().is_err());
    }
}
