use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::{invalid, Result};

/// Bias-corrected Adam. Moments are kept in f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize], beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn update<F: Scalar>(&mut self, params: &mut [&mut Vec<F>], grads: &[Vec<F>], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(invalid("optimizer state does not match parameters"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(invalid("gradient size does not match parameter"));
            }
            for i in 0..p.len() {
                let gi = g[i].f64();
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                let delta = lr * mh / (vh.sqrt() + self.epsilon);
                if delta != 0.0 {
                    p[i] = F::of(p[i].f64() - delta);
                }
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// an improvement larger than `min_delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub best: f64,
    pub wait: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_delta: f64) -> Self {
        Self { lr, factor, patience, min_delta, best: f64::INFINITY, wait: 0 }
    }

    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                self.lr *= self.factor;
                self.wait = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopDecision {
    /// New best; snapshot the parameters.
    Improved,
    Continue,
    /// Patience exhausted; restore the best snapshot.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
    pub best: f64,
    pub best_epoch: usize,
    pub wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self { patience, min_delta, best: f64::INFINITY, best_epoch: 0, wait: 0 }
    }

    pub fn step(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.wait = 0;
            StopDecision::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = Adam::new(&[3], 0.9, 0.999, 1e-8);
        let mut p = vec![1.0f32, -2.0, 3.0];
        adam.update(&mut [&mut p], &[vec![0.0; 3]], 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut adam = Adam::new(&[2], 0.9, 0.999, 1e-8);
        let mut p = vec![0.0f64, 0.0];
        adam.update(&mut [&mut p], &[vec![0.3, -7.0]], 0.01).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9 && (p[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn two_steps_match_scalar_trace() {
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.05);
        let mut adam = Adam::new(&[1], b1, b2, eps);
        let mut p = vec![0.5f64];
        let gs = [0.2, -0.6];
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 0.5f64);
        for (t, g) in gs.iter().enumerate() {
            adam.update(&mut [&mut p], &[vec![*g]], lr).unwrap();
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let k = (t + 1) as i32;
            x -= lr * (m / (1.0 - b1.powi(k))) / ((v / (1.0 - b2.powi(k))).sqrt() + eps);
            assert!((p[0] - x).abs() < 1e-7);
        }
    }

    #[test]
    fn plateau_semantics() {
        let mut s = PlateauScheduler::new(1.0, 0.25, 5, 1e-4);
        for i in 0..20 {
            assert_eq!(s.step(1.0 / (i + 1) as f64), 1.0);
        }
        let mut s = PlateauScheduler::new(1.0, 0.25, 5, 1e-4);
        s.step(1.0);
        let lrs: Vec<f64> = (0..10).map(|_| s.step(1.0)).collect();
        assert_eq!(lrs[3], 1.0);
        assert_eq!(lrs[4], 0.25);
        assert_eq!(lrs[8], 0.25);
        assert_eq!(lrs[9], 0.0625);
    }

    #[test]
    fn early_stop_after_patience() {
        let mut e = EarlyStopping::new(15, 1e-4);
        assert_eq!(e.step(0, 1.0), StopDecision::Improved);
        for epoch in 1..15 {
            assert_eq!(e.step(epoch, 1.0), StopDecision::Continue);
        }
        assert_eq!(e.step(15, 1.0), StopDecision::Stop);
        assert_eq!(e.best_epoch, 0);
    }
}
