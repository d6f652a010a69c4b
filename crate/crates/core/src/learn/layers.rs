//! Layer kernels. Each forward has a matching backward that takes the cached
//! forward input and the upstream gradient.

use rand::Rng;

use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{invalid, Result};

fn dims5<F: Scalar>(x: &Tensor<F>, what: &str) -> Result<[usize; 5]> {
    match *x.shape() {
        [n, t, h, w, c] => Ok([n, t, h, w, c]),
        ref s => Err(invalid(format!("{what} expects [N, T, H, W, C], got {s:?}"))),
    }
}

fn dims2<F: Scalar>(x: &Tensor<F>, what: &str) -> Result<[usize; 2]> {
    match *x.shape() {
        [n, d] => Ok([n, d]),
        ref s => Err(invalid(format!("{what} expects [N, D], got {s:?}"))),
    }
}

/// Valid (unpadded) strided 3D cross-correlation. Weights are laid out
/// `[kt, kh, kw, cin, cout]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3d<F: Scalar> {
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub cin: usize,
    pub cout: usize,
    pub weight: Vec<F>,
    pub bias: Vec<F>,
}

pub fn conv_out_dims(input: [usize; 3], kernel: [usize; 3], stride: [usize; 3]) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for i in 0..3 {
        if kernel[i] == 0 || stride[i] == 0 {
            return Err(invalid("kernel and stride must be positive"));
        }
        if input[i] < kernel[i] {
            return Err(invalid(format!("input {input:?} smaller than kernel {kernel:?}")));
        }
        out[i] = (input[i] - kernel[i]) / stride[i] + 1;
    }
    Ok(out)
}

impl<F: Scalar> Conv3d<F> {
    pub fn zeros(kernel: [usize; 3], stride: [usize; 3], cin: usize, cout: usize) -> Self {
        let n = kernel.iter().product::<usize>() * cin * cout;
        Self {
            kernel,
            stride,
            cin,
            cout,
            weight: vec![F::zero(); n],
            bias: vec![F::zero(); cout],
        }
    }

    fn check(&self, x: &Tensor<F>) -> Result<([usize; 5], [usize; 3])> {
        let d = dims5(x, "conv3d")?;
        if d[4] != self.cin {
            return Err(invalid(format!("conv3d expects {} input channels, got {}", self.cin, d[4])));
        }
        let o = conv_out_dims([d[1], d[2], d[3]], self.kernel, self.stride)?;
        Ok((d, o))
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let (d, o) = self.check(x)?;
        let out = match self.cout {
            4 => self.forward_kernel::<4>(x.data(), d, o),
            8 => self.forward_kernel::<8>(x.data(), d, o),
            16 => self.forward_kernel::<16>(x.data(), d, o),
            32 => self.forward_kernel::<32>(x.data(), d, o),
            _ => self.forward_kernel::<0>(x.data(), d, o),
        };
        Tensor::new(vec![d[0], o[0], o[1], o[2], self.cout], out)
    }

    /// `N` is the output channel count when non-zero, letting the inner
    /// loops compile to fixed-width code.
    fn forward_kernel<const N: usize>(&self, xd: &[F], [n, t, h, w, cin]: [usize; 5], [ot, oh, ow]: [usize; 3]) -> Vec<F> {
        let [kt, kh, kw] = self.kernel;
        let [st, sh, sw] = self.stride;
        let cout = if N > 0 { N } else { self.cout };
        let row = kw * cin;
        let mut out = vec![F::zero(); n * ot * oh * ow * cout];
        for b in 0..n {
            for to in 0..ot {
                for ho in 0..oh {
                    for wo in 0..ow {
                        let oi = (((b * ot + to) * oh + ho) * ow + wo) * cout;
                        let mut local = [F::zero(); N];
                        let acc: &mut [F] = if N > 0 { &mut local } else { &mut out[oi..oi + cout] };
                        acc.copy_from_slice(&self.bias);
                        for dt in 0..kt {
                            let ti = to * st + dt;
                            for dh in 0..kh {
                                let hi = ho * sh + dh;
                                let xb = (((b * t + ti) * h + hi) * w + wo * sw) * cin;
                                let wb = (dt * kh + dh) * row * cout;
                                let ws = &self.weight[wb..wb + row * cout];
                                for (&xv, wr) in xd[xb..xb + row].iter().zip(ws.chunks_exact(cout)) {
                                    if xv == F::zero() {
                                        continue;
                                    }
                                    for (a, &wv) in acc.iter_mut().zip(&wr[..cout]) {
                                        *a += xv * wv;
                                    }
                                }
                            }
                        }
                        if N > 0 {
                            out[oi..oi + cout].copy_from_slice(&local);
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight/bias gradients; returns the input gradient when
    /// `need_dx`.
    pub fn backward(
        &self,
        x: &Tensor<F>,
        dy: &Tensor<F>,
        dw: &mut [F],
        db: &mut [F],
        need_dx: bool,
    ) -> Result<Option<Tensor<F>>> {
        let (d, o) = self.check(x)?;
        if dy.shape() != [d[0], o[0], o[1], o[2], self.cout] {
            return Err(invalid("conv3d gradient shape mismatch"));
        }
        if dw.len() != self.weight.len() || db.len() != self.cout {
            return Err(invalid("conv3d gradient buffers have the wrong size"));
        }
        let args = (x.data(), dy.data(), dw, db, d, o, need_dx);
        let dx = match self.cout {
            4 => self.backward_kernel::<4>(args),
            8 => self.backward_kernel::<8>(args),
            16 => self.backward_kernel::<16>(args),
            32 => self.backward_kernel::<32>(args),
            _ => self.backward_kernel::<0>(args),
        };
        Ok(match dx {
            Some(dx) => Some(Tensor::new(x.shape().to_vec(), dx)?),
            None => None,
        })
    }

    #[allow(clippy::type_complexity)]
    fn backward_kernel<const N: usize>(
        &self,
        (xd, g, dw, db, [n, t, h, w, cin], [ot, oh, ow], need_dx): (
            &[F],
            &[F],
            &mut [F],
            &mut [F],
            [usize; 5],
            [usize; 3],
            bool,
        ),
    ) -> Option<Vec<F>> {
        let [kt, kh, kw] = self.kernel;
        let [st, sh, sw] = self.stride;
        let cout = if N > 0 { N } else { self.cout };
        let row = kw * cin;
        let mut dx = if need_dx { vec![F::zero(); xd.len()] } else { Vec::new() };
        let mut local = [F::zero(); N];
        let mut scratch = vec![F::zero(); if N > 0 { 0 } else { cout }];
        let xstep = sw * cin;
        for b in 0..n {
            for to in 0..ot {
                for ho in 0..oh {
                    let gb = ((b * ot + to) * oh + ho) * ow * cout;
                    let grow = &g[gb..gb + ow * cout];
                    for go in grow.chunks_exact(cout) {
                        for (d, &gv) in db.iter_mut().zip(go) {
                            *d += gv;
                        }
                    }
                    for dt in 0..kt {
                        let ti = to * st + dt;
                        for dh in 0..kh {
                            let hi = ho * sh + dh;
                            let xb = ((b * t + ti) * h + hi) * w * cin;
                            let wb = (dt * kh + dh) * row * cout;
                            for j in 0..row {
                                let acc: &mut [F] = if N > 0 { &mut local } else { &mut scratch };
                                acc.fill(F::zero());
                                for (wo, go) in grow.chunks_exact(cout).enumerate() {
                                    let xv = xd[xb + wo * xstep + j];
                                    if xv != F::zero() {
                                        for (a, &gv) in acc.iter_mut().zip(&go[..cout]) {
                                            *a += xv * gv;
                                        }
                                    }
                                }
                                for (d, &a) in dw[wb + j * cout..wb + (j + 1) * cout].iter_mut().zip(acc.iter()) {
                                    *d += a;
                                }
                                if need_dx {
                                    let wr = &self.weight[wb + j * cout..wb + (j + 1) * cout];
                                    for (wo, go) in grow.chunks_exact(cout).enumerate() {
                                        dx[xb + wo * xstep + j] += lane_dot(wr, &go[..cout]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        need_dx.then_some(dx)
    }
}

/// Dot product summed in four interleaved lanes; fixed order, so results
/// are reproducible.
#[inline(always)]
fn lane_dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut lanes = [F::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

/// Fully connected layer; weights `[inputs, units]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F: Scalar> {
    pub inputs: usize,
    pub units: usize,
    pub weight: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(inputs: usize, units: usize) -> Self {
        Self {
            inputs,
            units,
            weight: vec![F::zero(); inputs * units],
            bias: vec![F::zero(); units],
        }
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let [n, d] = dims2(x, "dense")?;
        if d != self.inputs {
            return Err(invalid(format!("dense expects {} inputs, got {d}", self.inputs)));
        }
        let u = self.units;
        let mut out = vec![F::zero(); n * u];
        for b in 0..n {
            let acc = &mut out[b * u..(b + 1) * u];
            acc.copy_from_slice(&self.bias);
            for (i, &xv) in x.data()[b * d..(b + 1) * d].iter().enumerate() {
                if xv == F::zero() {
                    continue;
                }
                for (a, &wv) in acc.iter_mut().zip(&self.weight[i * u..(i + 1) * u]) {
                    *a += xv * wv;
                }
            }
        }
        Tensor::new(vec![n, u], out)
    }

    pub fn backward(&self, x: &Tensor<F>, dy: &Tensor<F>, dw: &mut [F], db: &mut [F]) -> Result<Tensor<F>> {
        let [n, d] = dims2(x, "dense")?;
        let u = self.units;
        if dy.shape() != [n, u] {
            return Err(invalid("dense gradient shape mismatch"));
        }
        let mut dx = vec![F::zero(); n * d];
        for b in 0..n {
            let go = &dy.data()[b * u..(b + 1) * u];
            for (s, &gv) in db.iter_mut().zip(go) {
                *s += gv;
            }
            for i in 0..d {
                let xv = x.data()[b * d + i];
                let wr = &self.weight[i * u..(i + 1) * u];
                let dwr = &mut dw[i * u..(i + 1) * u];
                let mut s = F::zero();
                for o in 0..u {
                    dwr[o] += xv * go[o];
                    s += wr[o] * go[o];
                }
                dx[b * d + i] = s;
            }
        }
        Tensor::new(vec![n, d], dx)
    }
}

/// Per-channel normalisation over every axis but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<F: Scalar> {
    pub channels: usize,
    pub gamma: Vec<F>,
    pub beta: Vec<F>,
    pub running_mean: Vec<F>,
    pub running_var: Vec<F>,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<F: Scalar> {
    pub x_hat: Vec<F>,
    pub inv_std: Vec<F>,
}

impl<F: Scalar> BatchNorm<F> {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: vec![F::one(); channels],
            beta: vec![F::zero(); channels],
            running_mean: vec![F::zero(); channels],
            running_var: vec![F::one(); channels],
            momentum: 0.9,
            eps: 1e-5,
        }
    }

    fn rows(&self, x: &Tensor<F>) -> Result<usize> {
        let c = *x.shape().last().unwrap_or(&0);
        if c != self.channels || x.is_empty() {
            return Err(invalid(format!("batch norm expects {} channels, got shape {:?}", self.channels, x.shape())));
        }
        Ok(x.len() / c)
    }

    pub fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.rows(x)?;
        let c = self.channels;
        let eps = F::of(self.eps);
        let scale: Vec<F> = (0..c).map(|k| self.gamma[k] / (self.running_var[k] + eps).sqrt()).collect();
        let shift: Vec<F> = (0..c).map(|k| self.beta[k] - self.running_mean[k] * scale[k]).collect();
        let mut out = x.clone();
        for row in out.data_mut().chunks_exact_mut(c) {
            for k in 0..c {
                row[k] = row[k] * scale[k] + shift[k];
            }
        }
        Ok(out)
    }

    /// Batch statistics; updates the running estimates.
    pub fn forward_train(&mut self, x: &Tensor<F>) -> Result<(Tensor<F>, BatchNormCache<F>)> {
        let m = self.rows(x)?;
        let c = self.channels;
        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        for row in x.data().chunks_exact(c) {
            for k in 0..c {
                mean[k] += row[k].f64();
            }
        }
        mean.iter_mut().for_each(|v| *v /= m as f64);
        for row in x.data().chunks_exact(c) {
            for k in 0..c {
                let d = row[k].f64() - mean[k];
                var[k] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= m as f64);
        let inv_std: Vec<F> = var.iter().map(|&v| F::of(1.0 / (v + self.eps).sqrt())).collect();
        let mean_f: Vec<F> = mean.iter().map(|&v| F::of(v)).collect();
        let mut x_hat = x.data().to_vec();
        let mut out = vec![F::zero(); x.len()];
        for (xr, orow) in x_hat.chunks_exact_mut(c).zip(out.chunks_exact_mut(c)) {
            for k in 0..c {
                xr[k] = (xr[k] - mean_f[k]) * inv_std[k];
                orow[k] = self.gamma[k] * xr[k] + self.beta[k];
            }
        }
        let mo = F::of(self.momentum);
        let one = F::one();
        for k in 0..c {
            self.running_mean[k] = mo * self.running_mean[k] + (one - mo) * mean_f[k];
            self.running_var[k] = mo * self.running_var[k] + (one - mo) * F::of(var[k]);
        }
        Ok((Tensor::new(x.shape().to_vec(), out)?, BatchNormCache { x_hat, inv_std }))
    }

    pub fn backward_train(
        &self,
        cache: &BatchNormCache<F>,
        dy: &Tensor<F>,
        dgamma: &mut [F],
        dbeta: &mut [F],
    ) -> Result<Tensor<F>> {
        let m = self.rows(dy)?;
        let c = self.channels;
        let mut sum_d = vec![F::zero(); c];
        let mut sum_dx = vec![F::zero(); c];
        for (g, xh) in dy.data().chunks_exact(c).zip(cache.x_hat.chunks_exact(c)) {
            for k in 0..c {
                dbeta[k] += g[k];
                dgamma[k] += g[k] * xh[k];
                let d = g[k] * self.gamma[k];
                sum_d[k] += d;
                sum_dx[k] += d * xh[k];
            }
        }
        let mf = F::of(m as f64);
        let mut dx = vec![F::zero(); dy.len()];
        for ((o, g), xh) in dx.chunks_exact_mut(c).zip(dy.data().chunks_exact(c)).zip(cache.x_hat.chunks_exact(c)) {
            for k in 0..c {
                let d = g[k] * self.gamma[k];
                o[k] = cache.inv_std[k] / mf * (mf * d - sum_d[k] - xh[k] * sum_dx[k]);
            }
        }
        Tensor::new(dy.shape().to_vec(), dx)
    }

    /// Gradient of the eval-mode affine map.
    pub fn backward_eval(
        &self,
        x: &Tensor<F>,
        dy: &Tensor<F>,
        dgamma: &mut [F],
        dbeta: &mut [F],
    ) -> Result<Tensor<F>> {
        self.rows(x)?;
        let c = self.channels;
        let eps = F::of(self.eps);
        let inv: Vec<F> = (0..c).map(|k| F::one() / (self.running_var[k] + eps).sqrt()).collect();
        let mut dx = vec![F::zero(); dy.len()];
        for ((o, g), xr) in dx.chunks_exact_mut(c).zip(dy.data().chunks_exact(c)).zip(x.data().chunks_exact(c)) {
            for k in 0..c {
                let xh = (xr[k] - self.running_mean[k]) * inv[k];
                dbeta[k] += g[k];
                dgamma[k] += g[k] * xh;
                o[k] = g[k] * self.gamma[k] * inv[k];
            }
        }
        Tensor::new(dy.shape().to_vec(), dx)
    }
}

/// Non-overlapping max pooling (stride equals the window); trailing
/// elements that do not fill a window are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool3d {
    pub pool: [usize; 3],
}

impl MaxPool3d {
    pub fn out_dims(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        conv_out_dims(input, self.pool, self.pool)
    }

    /// Returns the pooled tensor and the flat input index of each maximum.
    pub fn forward<F: Scalar>(&self, x: &Tensor<F>) -> Result<(Tensor<F>, Vec<usize>)> {
        let [n, t, h, w, c] = dims5(x, "max_pool3d")?;
        let [ot, oh, ow] = self.out_dims([t, h, w])?;
        let [pt, ph, pw] = self.pool;
        let xd = x.data();
        let total = n * ot * oh * ow * c;
        let mut out = Vec::with_capacity(total);
        let mut arg = Vec::with_capacity(total);
        for b in 0..n {
            for to in 0..ot {
                for ho in 0..oh {
                    for wo in 0..ow {
                        for k in 0..c {
                            let mut best = usize::MAX;
                            for dt in 0..pt {
                                for dh in 0..ph {
                                    for dw in 0..pw {
                                        let i = ((((b * t + to * pt + dt) * h + ho * ph + dh) * w) + wo * pw + dw) * c + k;
                                        if best == usize::MAX || xd[i] > xd[best] {
                                            best = i;
                                        }
                                    }
                                }
                            }
                            out.push(xd[best]);
                            arg.push(best);
                        }
                    }
                }
            }
        }
        Ok((Tensor::new(vec![n, ot, oh, ow, c], out)?, arg))
    }

    pub fn backward<F: Scalar>(input_shape: &[usize], argmax: &[usize], dy: &Tensor<F>) -> Result<Tensor<F>> {
        if argmax.len() != dy.len() {
            return Err(invalid("max pool gradient shape mismatch"));
        }
        let mut dx = Tensor::zeros(input_shape.to_vec());
        let d = dx.data_mut();
        for (&i, &g) in argmax.iter().zip(dy.data()) {
            d[i] += g;
        }
        Ok(dx)
    }
}

pub fn relu_forward<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.map(|v| if v > F::zero() { v } else { F::zero() })
}

/// `y` is the forward output.
pub fn relu_backward<F: Scalar>(y: &Tensor<F>, dy: &Tensor<F>) -> Result<Tensor<F>> {
    if y.shape() != dy.shape() {
        return Err(invalid("relu gradient shape mismatch"));
    }
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > F::zero() { g } else { F::zero() })
        .collect();
    Tensor::new(dy.shape().to_vec(), data)
}

/// Inverted dropout mask: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout_mask<F: Scalar>(len: usize, rate: f64, rng: &mut impl Rng) -> Vec<F> {
    if rate <= 0.0 {
        return vec![F::one(); len];
    }
    let keep = F::of(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.random::<f64>() >= rate { keep } else { F::zero() })
        .collect()
}

pub fn apply_mask<F: Scalar>(x: &Tensor<F>, mask: &[F]) -> Result<Tensor<F>> {
    if mask.len() != x.len() {
        return Err(invalid("dropout mask length mismatch"));
    }
    let data = x.data().iter().zip(mask).map(|(&a, &m)| a * m).collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Row-wise softmax of `[N, C]` logits.
pub fn softmax<F: Scalar>(logits: &Tensor<F>) -> Result<Tensor<F>> {
    let [_, c] = dims2(logits, "softmax")?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(c) {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(out)
}

/// Mean cross-entropy of softmax(logits) against integer labels. Returns
/// the loss, its gradient with respect to the logits, and the probabilities.
pub fn softmax_cross_entropy<F: Scalar>(logits: &Tensor<F>, labels: &[usize]) -> Result<(f64, Tensor<F>, Tensor<F>)> {
    let [n, c] = dims2(logits, "softmax cross-entropy")?;
    if labels.len() != n {
        return Err(invalid(format!("{} labels for batch of {n}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(invalid(format!("label {bad} out of range for {c} classes")));
    }
    let probs = softmax(logits)?;
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let inv_n = F::of(1.0 / n as f64);
    for (b, &l) in labels.iter().enumerate() {
        let row = &mut grad.data_mut()[b * c..(b + 1) * c];
        // log-softmax directly from logits for accuracy.
        let lr = &logits.data()[b * c..(b + 1) * c];
        let max = lr.iter().map(|v| v.f64()).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + lr.iter().map(|v| (v.f64() - max).exp()).sum::<f64>().ln();
        loss += lse - lr[l].f64();
        row[l] -= F::one();
        for v in row.iter_mut() {
            *v = *v * inv_n;
        }
    }
    Ok((loss / n as f64, grad, probs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_is_identity() {
        let mut conv = Conv3d::<f64>::zeros([1, 1, 1], [1, 1, 1], 1, 1);
        conv.weight[0] = 1.0;
        let x = Tensor::new(vec![1, 2, 3, 4, 1], (0..24).map(|v| v as f64).collect()).unwrap();
        assert_eq!(conv.forward(&x).unwrap(), x);
    }

    #[test]
    fn all_ones_kernel_on_constant() {
        let mut conv = Conv3d::<f64>::zeros([2, 2, 2], [1, 1, 1], 1, 1);
        conv.weight.iter_mut().for_each(|w| *w = 1.0);
        let x = Tensor::new(vec![1, 3, 3, 3, 1], vec![1.5; 27]).unwrap();
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 2, 1]);
        assert!(y.data().iter().all(|&v| v == 12.0));
    }

    #[test]
    fn conv_rejects_bad_shapes() {
        let conv = Conv3d::<f32>::zeros([3, 3, 3], [1, 1, 1], 2, 4);
        assert!(conv.forward(&Tensor::zeros(vec![1, 4, 4, 4, 1])).is_err());
        assert!(conv.forward(&Tensor::zeros(vec![1, 2, 4, 4, 2])).is_err());
        assert!(conv.forward(&Tensor::zeros(vec![4, 4, 2])).is_err());
    }

    #[test]
    fn softmax_xent_closed_form() {
        let logits = Tensor::new(vec![2, 3], vec![1.0f64, 2.0, 3.0, 0.0, 0.0, 0.0]).unwrap();
        let (loss, grad, probs) = softmax_cross_entropy(&logits, &[2, 0]).unwrap();
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).sum();
        let expect = ((z.ln() - 3.0) + 3f64.ln()) / 2.0;
        assert!((loss - expect).abs() < 1e-12);
        for row in probs.data().chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((grad.data()[3] - (1.0 / 3.0 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let mut rng = crate::seed::rng_for(1, &[]);
        let m: Vec<f32> = dropout_mask(100, 0.0, &mut rng);
        assert!(m.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn batch_norm_train_normalises() {
        let mut bn = BatchNorm::<f64>::new(2);
        let mut rng = crate::seed::rng_for(3, &[]);
        let data: Vec<f64> = (0..4000).map(|i| if i % 2 == 0 { 5.0 + rng.random::<f64>() * 4.0 } else { -3.0 + rng.random::<f64>() }).collect();
        let x = Tensor::new(vec![2000, 2], data).unwrap();
        let (y, _) = bn.forward_train(&x).unwrap();
        for k in 0..2 {
            let vals: Vec<f64> = y.data().iter().skip(k).step_by(2).copied().collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-3);
            assert!((var - 1.0).abs() < 1e-2);
        }
    }
}
