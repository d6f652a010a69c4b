use serde::{Deserialize, Serialize};

use super::augment::{augment_sequence, AugmentConfig};
use super::layers::softmax_cross_entropy;
use super::network::Network;
use super::optim::{Adam, EarlyStopping, PlateauScheduler, StopDecision};
use super::tensor::Tensor;
use crate::error::{invalid, Error, Result};
use crate::seed::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_delta: f64,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub init_std: f64,
    /// Training sequences drawn per epoch; 0 uses all of them.
    pub samples_per_epoch: usize,
    pub augment: bool,
    pub augment_config: AugmentConfig,
    /// Width of one sensor's block in the concatenated frame.
    pub block_width: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            dropout_rate: 0.5,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            plateau_patience: 5,
            plateau_factor: 0.25,
            min_delta: 1e-4,
            early_stop_patience: 15,
            max_epochs: 100,
            init_std: 0.01,
            samples_per_epoch: 0,
            augment: true,
            augment_config: AugmentConfig::default(),
            block_width: 40,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64, open_low: bool| {
            let ok = if open_low { v > 0.0 && v < 1.0 } else { (0.0..1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in {}0, 1), got {v}", if open_low { "(" } else { "[" })))
            }
        };
        unit("learning_rate", self.learning_rate, true)?;
        unit("dropout_rate", self.dropout_rate, false)?;
        unit("beta1", self.beta1, false)?;
        unit("beta2", self.beta2, false)?;
        unit("plateau_factor", self.plateau_factor, true)?;
        if self.batch_size == 0 || self.plateau_patience == 0 || self.early_stop_patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size, patiences and max epochs must be positive".into()));
        }
        if !(self.init_std > 0.0) || !(self.epsilon > 0.0) || self.block_width == 0 {
            return Err(Error::Config("init_std, epsilon and block width must be positive".into()));
        }
        self.augment_config.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

/// Fixed-size sequences `[t, h, w]` of 8-bit frames with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dims: (usize, usize, usize),
    pub data: Vec<u8>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dims: (usize, usize, usize)) -> Self {
        Self { dims, data: Vec::new(), labels: Vec::new() }
    }

    pub fn sample_len(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    pub fn push(&mut self, seq: &[u8], label: usize) -> Result<()> {
        if seq.len() != self.sample_len() {
            return Err(invalid(format!("sequence has {} values, expected {}", seq.len(), self.sample_len())));
        }
        self.data.extend_from_slice(seq);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[u8] {
        let n = self.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    /// `[N, t, h, w, 1]` batch scaled to [0, 1], without augmentation.
    pub fn batch(&self, idx: &[usize]) -> Result<Tensor<f32>> {
        let (t, h, w) = self.dims;
        let mut data = Vec::with_capacity(idx.len() * self.sample_len());
        for &i in idx {
            data.extend(self.sample(i).iter().map(|&v| v as f32 / 255.0));
        }
        Tensor::new(vec![idx.len(), t, h, w, 1], data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

/// Everything needed to continue training bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub next_epoch: usize,
    pub adam: Adam,
    pub scheduler: PlateauScheduler,
    pub early: EarlyStopping,
    pub best_state: Vec<Vec<f32>>,
    /// Parameters after the last completed epoch.
    pub last_state: Vec<Vec<f32>>,
    pub history: Vec<EpochLog>,
    pub stopped: bool,
}

impl TrainState {
    pub fn fresh(net: &Network<f32>, cfg: &TrainConfig) -> Self {
        let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
        Self {
            next_epoch: 0,
            adam: Adam::new(&sizes, cfg.beta1, cfg.beta2, cfg.epsilon),
            scheduler: PlateauScheduler::new(cfg.learning_rate, cfg.plateau_factor, cfg.plateau_patience, cfg.min_delta),
            early: EarlyStopping::new(cfg.early_stop_patience, cfg.min_delta),
            best_state: net.state(),
            last_state: Vec::new(),
            history: Vec::new(),
            stopped: false,
        }
    }
}

/// Lowest index wins ties.
pub fn argmax(p: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Element-wise mean of probability vectors.
pub fn mean_probabilities(probs: &[Vec<f32>]) -> Result<Vec<f32>> {
    let first = probs.first().ok_or_else(|| invalid("no predictions to average"))?;
    if probs.iter().any(|p| p.len() != first.len()) {
        return Err(invalid("prediction vectors differ in length"));
    }
    let mut acc = vec![0.0f64; first.len()];
    for p in probs {
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v as f64;
        }
    }
    Ok(acc.iter().map(|&a| (a / probs.len() as f64) as f32).collect())
}

/// Softmax outputs per sequence of an `[N, t, h, w, 1]` batch.
pub fn predict_batch(net: &Network<f32>, x: &Tensor<f32>) -> Result<Vec<Vec<f32>>> {
    let p = net.predict_proba(x)?;
    Ok(p.data().chunks(net.classes).map(<[f32]>::to_vec).collect())
}

pub fn predict_dataset(net: &Network<f32>, ds: &Dataset, batch: usize) -> Result<Vec<Vec<f32>>> {
    let mut out = Vec::with_capacity(ds.len());
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(batch.max(1)) {
        out.extend(predict_batch(net, &ds.batch(chunk)?)?);
    }
    Ok(out)
}

/// Mean loss and accuracy without augmentation or dropout.
pub fn evaluate(net: &Network<f32>, ds: &Dataset, batch: usize) -> Result<(f64, f64)> {
    if ds.is_empty() {
        return Err(invalid("cannot evaluate on an empty dataset"));
    }
    let idx: Vec<usize> = (0..ds.len()).collect();
    let (mut loss, mut correct) = (0.0, 0usize);
    for chunk in idx.chunks(batch.max(1)) {
        let logits = net.forward_eval(&ds.batch(chunk)?)?;
        let labels: Vec<usize> = chunk.iter().map(|&i| ds.labels[i]).collect();
        let (l, _, probs) = softmax_cross_entropy(&logits, &labels)?;
        loss += l * chunk.len() as f64;
        for (row, &y) in probs.data().chunks(net.classes).zip(&labels) {
            correct += (argmax(row) == y) as usize;
        }
    }
    Ok((loss / ds.len() as f64, correct as f64 / ds.len() as f64))
}

fn train_batch(ds: &Dataset, idx: &[usize], cfg: &TrainConfig, epoch: usize) -> Result<Tensor<f32>> {
    if !cfg.augment {
        return ds.batch(idx);
    }
    let (t, h, w) = ds.dims;
    let n = ds.sample_len();
    let mut data = vec![0.0f32; idx.len() * n];
    for (k, &i) in idx.iter().enumerate() {
        let seed = derive_seed(cfg.seed, &[0xa06, epoch as u64, i as u64]);
        augment_sequence(ds.sample(i), ds.dims, cfg.block_width.min(w), &cfg.augment_config, seed, &mut data[k * n..(k + 1) * n])?;
    }
    Tensor::new(vec![idx.len(), t, h, w, 1], data)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub state: TrainState,
}

/// Runs epochs until early stopping or `max_epochs`, then restores the
/// best-epoch parameters. `state` resumes a previous run.
pub fn fit(
    net: &mut Network<f32>,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    state: Option<TrainState>,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(invalid("training and validation sets must be non-empty"));
    }
    if train.dims != val.dims {
        return Err(invalid("training and validation dims differ"));
    }
    let mut st = match state {
        Some(st) => {
            if !st.last_state.is_empty() {
                net.load_state(&st.last_state)?;
            }
            st
        }
        None => TrainState::fresh(net, cfg),
    };
    let eval_batch = 32;
    while !st.stopped && st.next_epoch < cfg.max_epochs {
        let epoch = st.next_epoch;
        let lr = st.scheduler.lr;
        let mut order: Vec<usize> = (0..train.len()).collect();
        {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng_for(cfg.seed, &[0x5eed, epoch as u64]));
        }
        if cfg.samples_per_epoch > 0 {
            order.truncate(cfg.samples_per_epoch);
        }
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_batch(train, chunk, cfg, epoch)?;
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let mut drop_rng = rng_for(cfg.seed, &[0xd0, epoch as u64, b as u64]);
            let trace = |st: &TrainState| st.history.iter().map(|h| h.train_loss).collect::<Vec<_>>();
            let (logits, caches) = net.forward_train(&x, &mut drop_rng).map_err(|e| Error::Training {
                epoch,
                reason: e.to_string(),
                trace: trace(&st),
            })?;
            let (loss, dlogits, _) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Training { epoch, reason: "loss is not finite".into(), trace: trace(&st) });
            }
            let grads = net.backward(&caches, &dlogits).map_err(|e| Error::Training {
                epoch,
                reason: e.to_string(),
                trace: trace(&st),
            })?;
            st.adam.update(&mut net.params_mut(), &grads, lr)?;
            total += loss * chunk.len() as f64;
        }
        let (val_loss, val_accuracy) = evaluate(net, val, eval_batch)?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: "validation loss is not finite".into(),
                trace: st.history.iter().map(|h| h.train_loss).collect(),
            });
        }
        let log = EpochLog { epoch, train_loss: total / order.len() as f64, val_loss, val_accuracy, lr };
        on_epoch(&log);
        st.history.push(log);
        st.scheduler.step(val_loss);
        match st.early.step(epoch, val_loss) {
            StopDecision::Improved => st.best_state = net.state(),
            StopDecision::Continue => {}
            StopDecision::Stop => st.stopped = true,
        }
        st.next_epoch += 1;
    }
    st.last_state = net.state();
    net.load_state(&st.best_state)?;
    Ok(TrainOutcome {
        history: st.history.clone(),
        best_epoch: st.early.best_epoch,
        stopped_early: st.stopped,
        state: st,
    })
}
