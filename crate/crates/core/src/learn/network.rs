use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::layers::{
    apply_mask, conv_out_dims, dropout_mask, relu_backward, relu_forward, softmax, BatchNorm, BatchNormCache, Conv3d,
    Dense, MaxPool3d,
};
use super::scalar::Scalar;
use super::spec::{LayerSpec, NetworkSpec, Units};
use super::tensor::Tensor;
use crate::error::{invalid, Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<F: Scalar> {
    Conv3d(Conv3d<F>),
    Dense(Dense<F>),
    BatchNorm(BatchNorm<F>),
    MaxPool3d(MaxPool3d),
    Relu,
    Flatten,
    Dropout(f64),
    Softmax,
}

/// Per-layer values kept from a training forward pass.
#[derive(Debug, Clone)]
pub enum Cache<F: Scalar> {
    Input(Tensor<F>),
    BatchNorm(BatchNormCache<F>),
    Pool { input_shape: Vec<usize>, argmax: Vec<usize> },
    Output(Tensor<F>),
    Shape(Vec<usize>),
    Mask(Vec<F>),
    None,
}

/// Sequential network. Input is `[N, T, H, W, C]`; output is logits
/// `[N, classes]` (the terminal softmax is applied by the loss or by
/// [`Network::predict_proba`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F: Scalar = f32> {
    pub spec: NetworkSpec,
    pub input: [usize; 4],
    pub classes: usize,
    pub layers: Vec<Layer<F>>,
}

impl<F: Scalar> Network<F> {
    /// Builds layers for `input = [T, H, W, C]`, drawing weights from
    /// N(0, init_std); biases start at zero.
    pub fn build(
        spec: &NetworkSpec,
        input: [usize; 4],
        classes: usize,
        dropout_rate: f64,
        init_std: f64,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if classes == 0 || input.contains(&0) {
            return Err(Error::Config("network needs positive input dims and classes".into()));
        }
        let normal = Normal::new(0.0, init_std).map_err(|e| Error::Config(format!("init std: {e}")))?;
        let mut rng = rng_for(seed, &[0x1417]);
        let mut draw = |n: usize| -> Vec<F> { (0..n).map(|_| F::of(normal.sample(&mut rng))).collect() };
        let mut vol = Some(input);
        let mut flat = 0usize;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for l in &spec.layers {
            let layer = match *l {
                LayerSpec::Conv3d { kernel, filters, stride } => {
                    let [t, h, w, c] = vol.ok_or_else(|| Error::Config("conv3d after flatten".into()))?;
                    let [ot, oh, ow] = conv_out_dims([t, h, w], kernel, stride)
                        .map_err(|e| Error::Config(format!("{l}: {e}")))?;
                    let mut conv = Conv3d::zeros(kernel, stride, c, filters);
                    conv.weight = draw(conv.weight.len());
                    vol = Some([ot, oh, ow, filters]);
                    Layer::Conv3d(conv)
                }
                LayerSpec::MaxPool3d { pool } => {
                    let [t, h, w, c] = vol.ok_or_else(|| Error::Config("pooling after flatten".into()))?;
                    let p = MaxPool3d { pool };
                    let [ot, oh, ow] = p.out_dims([t, h, w]).map_err(|e| Error::Config(format!("{l}: {e}")))?;
                    vol = Some([ot, oh, ow, c]);
                    Layer::MaxPool3d(p)
                }
                LayerSpec::BatchNorm => {
                    let c = match vol {
                        Some(v) => v[3],
                        None => flat,
                    };
                    Layer::BatchNorm(BatchNorm::new(c))
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Flatten => {
                    let v = vol.take().ok_or_else(|| Error::Config("flatten appears twice".into()))?;
                    flat = v.iter().product();
                    Layer::Flatten
                }
                LayerSpec::Dense { units } => {
                    let u = match units {
                        Units::Fixed(u) => u,
                        Units::Classes => classes,
                    };
                    let mut d = Dense::zeros(flat, u);
                    d.weight = draw(d.weight.len());
                    flat = u;
                    Layer::Dense(d)
                }
                LayerSpec::Dropout { rate } => Layer::Dropout(rate.unwrap_or(dropout_rate)),
                LayerSpec::Softmax => {
                    if flat != classes {
                        return Err(Error::Config(format!("final dense has {flat} units for {classes} classes")));
                    }
                    Layer::Softmax
                }
            };
            layers.push(layer);
        }
        Ok(Self { spec: spec.clone(), input, classes, layers })
    }

    fn check_input(&self, x: &Tensor<F>) -> Result<()> {
        let s = x.shape();
        if s.len() != 5 || s[1..] != self.input || s[0] == 0 {
            return Err(invalid(format!("network expects [N, {:?}], got {s:?}", self.input)));
        }
        Ok(())
    }

    pub fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &self.layers {
            a = match layer {
                Layer::Conv3d(c) => c.forward(&a)?,
                Layer::Dense(d) => d.forward(&a)?,
                Layer::BatchNorm(b) => b.forward_eval(&a)?,
                Layer::MaxPool3d(p) => p.forward(&a)?.0,
                Layer::Relu => relu_forward(&a),
                Layer::Flatten => {
                    let n = a.batch();
                    let d = a.len() / n;
                    a.reshape(vec![n, d])?
                }
                Layer::Dropout(_) | Layer::Softmax => a,
            };
        }
        a.ensure_finite("forward pass")?;
        Ok(a)
    }

    /// Training-mode forward: batch statistics (running estimates are
    /// updated) and dropout masks drawn from `rng`.
    pub fn forward_train(&mut self, x: &Tensor<F>, rng: &mut impl Rng) -> Result<(Tensor<F>, Vec<Cache<F>>)> {
        self.check_input(x)?;
        let mut a = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &mut self.layers {
            let (out, cache) = match layer {
                Layer::Conv3d(c) => (c.forward(&a)?, Cache::Input(a)),
                Layer::Dense(d) => (d.forward(&a)?, Cache::Input(a)),
                Layer::BatchNorm(b) => {
                    let (y, c) = b.forward_train(&a)?;
                    (y, Cache::BatchNorm(c))
                }
                Layer::MaxPool3d(p) => {
                    let (y, argmax) = p.forward(&a)?;
                    (y, Cache::Pool { input_shape: a.shape().to_vec(), argmax })
                }
                Layer::Relu => {
                    let y = relu_forward(&a);
                    (y.clone(), Cache::Output(y))
                }
                Layer::Flatten => {
                    let shape = a.shape().to_vec();
                    let n = a.batch();
                    let d = a.len() / n;
                    (a.reshape(vec![n, d])?, Cache::Shape(shape))
                }
                Layer::Dropout(rate) => {
                    let mask = dropout_mask(a.len(), *rate, rng);
                    (apply_mask(&a, &mask)?, Cache::Mask(mask))
                }
                Layer::Softmax => (a, Cache::None),
            };
            caches.push(cache);
            a = out;
        }
        a.ensure_finite("forward pass")?;
        Ok((a, caches))
    }

    /// Gradients for every parameter tensor, in [`Network::params`] order.
    pub fn backward(&self, caches: &[Cache<F>], dlogits: &Tensor<F>) -> Result<Vec<Vec<F>>> {
        self.backward_impl(caches, dlogits, false).map(|(g, _)| g)
    }

    /// As [`Network::backward`], also returning the gradient at the input.
    pub fn backward_with_input(&self, caches: &[Cache<F>], dlogits: &Tensor<F>) -> Result<(Vec<Vec<F>>, Tensor<F>)> {
        self.backward_impl(caches, dlogits, true)
    }

    fn backward_impl(
        &self,
        caches: &[Cache<F>],
        dlogits: &Tensor<F>,
        input_grad: bool,
    ) -> Result<(Vec<Vec<F>>, Tensor<F>)> {
        if caches.len() != self.layers.len() {
            return Err(invalid("cache does not match network"));
        }
        let mut grads: Vec<Vec<F>> = self.params().iter().map(|p| vec![F::zero(); p.len()]).collect();
        let mut slot = grads.len();
        let mut g = dlogits.clone();
        for (i, (layer, cache)) in self.layers.iter().zip(caches).enumerate().rev() {
            g = match (layer, cache) {
                (Layer::Conv3d(c), Cache::Input(x)) => {
                    slot -= 2;
                    let (gw, gb) = grads[slot..slot + 2].split_at_mut(1);
                    match c.backward(x, &g, &mut gw[0], &mut gb[0], i > 0 || input_grad)? {
                        Some(dx) => dx,
                        None => Tensor::zeros(vec![0]),
                    }
                }
                (Layer::Dense(d), Cache::Input(x)) => {
                    slot -= 2;
                    let (gw, gb) = grads[slot..slot + 2].split_at_mut(1);
                    d.backward(x, &g, &mut gw[0], &mut gb[0])?
                }
                (Layer::BatchNorm(b), Cache::BatchNorm(c)) => {
                    slot -= 2;
                    let (gg, gb) = grads[slot..slot + 2].split_at_mut(1);
                    b.backward_train(c, &g, &mut gg[0], &mut gb[0])?
                }
                (Layer::MaxPool3d(_), Cache::Pool { input_shape, argmax }) => {
                    MaxPool3d::backward(input_shape, argmax, &g)?
                }
                (Layer::Relu, Cache::Output(y)) => relu_backward(y, &g)?,
                (Layer::Flatten, Cache::Shape(s)) => g.reshape(s.clone())?,
                (Layer::Dropout(_), Cache::Mask(m)) => apply_mask(&g, m)?,
                (Layer::Softmax, Cache::None) => g,
                _ => return Err(invalid("cache does not match layer")),
            };
        }
        for gr in &grads {
            if gr.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite gradient".into()));
            }
        }
        Ok((grads, g))
    }

    pub fn predict_proba(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        softmax(&self.forward_eval(x)?)
    }

    /// Trainable tensors in layer order: conv/dense weight then bias,
    /// batch-norm gamma then beta.
    pub fn params(&self) -> Vec<&Vec<F>> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv3d(c) => out.extend([&c.weight, &c.bias]),
                Layer::Dense(d) => out.extend([&d.weight, &d.bias]),
                Layer::BatchNorm(b) => out.extend([&b.gamma, &b.beta]),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<F>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv3d(c) => out.extend([&mut c.weight, &mut c.bias]),
                Layer::Dense(d) => out.extend([&mut d.weight, &mut d.bias]),
                Layer::BatchNorm(b) => out.extend([&mut b.gamma, &mut b.beta]),
                _ => {}
            }
        }
        out
    }

    /// Non-trainable state (batch-norm running mean and variance).
    pub fn buffers(&self) -> Vec<&Vec<F>> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::BatchNorm(b) => Some([&b.running_mean, &b.running_var]),
                _ => None,
            })
            .flatten()
            .collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<F>> {
        self.layers
            .iter_mut()
            .filter_map(|l| match l {
                Layer::BatchNorm(b) => Some([&mut b.running_mean, &mut b.running_var]),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Parameters then buffers, as one list.
    pub fn state(&self) -> Vec<Vec<F>> {
        self.params().into_iter().chain(self.buffers()).cloned().collect()
    }

    pub fn load_state(&mut self, state: &[Vec<F>]) -> Result<()> {
        let mut slots: Vec<&mut Vec<F>> = Vec::new();
        let n_params = self.params().len();
        let n_buf = self.buffers().len();
        if state.len() != n_params + n_buf {
            return Err(invalid("state tensor count does not match network"));
        }
        for l in &mut self.layers {
            match l {
                Layer::Conv3d(c) => slots.extend([&mut c.weight, &mut c.bias]),
                Layer::Dense(d) => slots.extend([&mut d.weight, &mut d.bias]),
                Layer::BatchNorm(b) => slots.extend([&mut b.gamma, &mut b.beta]),
                _ => {}
            }
        }
        for (dst, src) in slots.into_iter().zip(state) {
            if dst.len() != src.len() {
                return Err(invalid("state tensor size does not match network"));
            }
            dst.copy_from_slice(src);
        }
        for (dst, src) in self.buffers_mut().into_iter().zip(&state[n_params..]) {
            if dst.len() != src.len() {
                return Err(invalid("state tensor size does not match network"));
            }
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Same network with every value converted to another scalar type.
    pub fn cast<G: Scalar>(&self) -> Network<G> {
        let c = |v: &Vec<F>| v.iter().map(|x| G::of(x.f64())).collect::<Vec<G>>();
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv3d(x) => Layer::Conv3d(Conv3d {
                    kernel: x.kernel,
                    stride: x.stride,
                    cin: x.cin,
                    cout: x.cout,
                    weight: c(&x.weight),
                    bias: c(&x.bias),
                }),
                Layer::Dense(x) => Layer::Dense(Dense {
                    inputs: x.inputs,
                    units: x.units,
                    weight: c(&x.weight),
                    bias: c(&x.bias),
                }),
                Layer::BatchNorm(x) => Layer::BatchNorm(BatchNorm {
                    channels: x.channels,
                    gamma: c(&x.gamma),
                    beta: c(&x.beta),
                    running_mean: c(&x.running_mean),
                    running_var: c(&x.running_var),
                    momentum: x.momentum,
                    eps: x.eps,
                }),
                Layer::MaxPool3d(p) => Layer::MaxPool3d(*p),
                Layer::Relu => Layer::Relu,
                Layer::Flatten => Layer::Flatten,
                Layer::Dropout(r) => Layer::Dropout(*r),
                Layer::Softmax => Layer::Softmax,
            })
            .collect();
        Network {
            spec: self.spec.clone(),
            input: self.input,
            classes: self.classes,
            layers,
        }
    }
}
