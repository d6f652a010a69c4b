//! Finite-difference and oracle checks for the network layers. Each
//! function returns the worst error over `seeds` random cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tacgrasp::learn::{
    apply_mask, softmax_cross_entropy, BatchNorm, Conv3d, Dense, Network, NetworkSpec, Tensor,
};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), rand_vec(rng, n)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every entry of `v`.
fn numeric(v: &mut [f64], f: &mut dyn FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + H;
            let up = f(v);
            v[i] = orig - H;
            let down = f(v);
            v[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

/// Worst relative error of conv3d dw, db and dx.
pub fn conv3d_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stride = [1 + (seed % 2) as usize, 1, 1 + (seed % 3 == 0) as usize];
        let mut conv = Conv3d::<f64>::zeros([2, 2, 3], stride, 2, 3);
        conv.weight = rand_vec(&mut rng, conv.weight.len());
        conv.bias = rand_vec(&mut rng, 3);
        let x = rand_tensor(&mut rng, &[2, 3, 4, 5, 2]);
        let y = conv.forward(&x).unwrap();
        let r = rand_vec(&mut rng, y.len());
        let dy = Tensor::new(y.shape().to_vec(), r.clone()).unwrap();
        let mut dw = vec![0.0; conv.weight.len()];
        let mut db = vec![0.0; 3];
        let dx = conv.backward(&x, &dy, &mut dw, &mut db, true).unwrap().unwrap();

        let mut w = conv.weight.clone();
        let nw = numeric(&mut w, &mut |w| {
            let mut c = conv.clone();
            c.weight = w.to_vec();
            dot(c.forward(&x).unwrap().data(), &r)
        });
        let mut b = conv.bias.clone();
        let nb = numeric(&mut b, &mut |b| {
            let mut c = conv.clone();
            c.bias = b.to_vec();
            dot(c.forward(&x).unwrap().data(), &r)
        });
        let mut xv = x.data().to_vec();
        let nx = numeric(&mut xv, &mut |xv| {
            let xt = Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap();
            dot(conv.forward(&xt).unwrap().data(), &r)
        });
        worst = worst.max(rel_err(&dw, &nw));
        worst = worst.max(rel_err(&db, &nb));
        worst = worst.max(rel_err(dx.data(), &nx));
    }
    worst
}

pub fn dense_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = Dense::<f64>::zeros(7, 4);
        dense.weight = rand_vec(&mut rng, 28);
        dense.bias = rand_vec(&mut rng, 4);
        let x = rand_tensor(&mut rng, &[3, 7]);
        let r = rand_vec(&mut rng, 12);
        let dy = Tensor::new(vec![3, 4], r.clone()).unwrap();
        let mut dw = vec![0.0; 28];
        let mut db = vec![0.0; 4];
        let dx = dense.backward(&x, &dy, &mut dw, &mut db).unwrap();
        let mut w = dense.weight.clone();
        let nw = numeric(&mut w, &mut |w| {
            let mut d = dense.clone();
            d.weight = w.to_vec();
            dot(d.forward(&x).unwrap().data(), &r)
        });
        let mut xv = x.data().to_vec();
        let nx = numeric(&mut xv, &mut |xv| {
            dot(dense.forward(&Tensor::new(vec![3, 7], xv.to_vec()).unwrap()).unwrap().data(), &r)
        });
        worst = worst.max(rel_err(&dw, &nw));
        worst = worst.max(rel_err(dx.data(), &nx));
        worst = worst.max(rel_err(&db, &(0..4).map(|k| (0..3).map(|i| r[i * 4 + k]).sum()).collect::<Vec<f64>>()));
    }
    worst
}

/// Train-mode dx and dgamma, eval-mode dx.
pub fn batch_norm_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bn = BatchNorm::<f64>::new(3);
        bn.gamma = rand_vec(&mut rng, 3).iter().map(|g| g + 1.5).collect();
        bn.beta = rand_vec(&mut rng, 3);
        let x = rand_tensor(&mut rng, &[4, 2, 3]);
        let r = rand_vec(&mut rng, x.len());
        let dy = Tensor::new(x.shape().to_vec(), r.clone()).unwrap();

        let (_, cache) = bn.clone().forward_train(&x).unwrap();
        let (mut dg, mut dbt) = (vec![0.0; 3], vec![0.0; 3]);
        let dx = bn.backward_train(&cache, &dy, &mut dg, &mut dbt).unwrap();
        let mut xv = x.data().to_vec();
        let nx = numeric(&mut xv, &mut |xv| {
            let xt = Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap();
            dot(bn.clone().forward_train(&xt).unwrap().0.data(), &r)
        });
        let mut g = bn.gamma.clone();
        let ng = numeric(&mut g, &mut |g| {
            let mut b = bn.clone();
            b.gamma = g.to_vec();
            dot(b.forward_train(&x).unwrap().0.data(), &r)
        });
        worst = worst.max(rel_err(dx.data(), &nx));
        worst = worst.max(rel_err(&dg, &ng));

        bn.running_mean = rand_vec(&mut rng, 3);
        bn.running_var = rand_vec(&mut rng, 3).iter().map(|v| v + 1.5).collect();
        let (mut dg, mut dbt) = (vec![0.0; 3], vec![0.0; 3]);
        let dx = bn.backward_eval(&x, &dy, &mut dg, &mut dbt).unwrap();
        let mut xv = x.data().to_vec();
        let nx = numeric(&mut xv, &mut |xv| {
            dot(bn.forward_eval(&Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap()).unwrap().data(), &r)
        });
        worst = worst.max(rel_err(dx.data(), &nx));
    }
    worst
}

pub fn dropout_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    let spec: NetworkSpec = "flatten -> dense(6) -> dropout(0.5) -> dense(classes) -> softmax".parse().unwrap();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Eval mode: dropout is the identity, so the gradient of the network
        // equals that of the same network without it.
        let net = Network::<f64>::build(&spec, [1, 1, 5, 1], 3, 0.5, 0.5, seed).unwrap();
        let x = rand_tensor(&mut rng, &[2, 1, 1, 5, 1]);
        let r = rand_vec(&mut rng, 6);
        let plain: NetworkSpec = "flatten -> dense(6) -> dense(classes) -> softmax".parse().unwrap();
        let mut twin = Network::<f64>::build(&plain, [1, 1, 5, 1], 3, 0.0, 0.5, seed).unwrap();
        twin.load_state(&net.state()).unwrap();
        if net.forward_eval(&x).unwrap() != twin.forward_eval(&x).unwrap() {
            return f64::INFINITY;
        }
        let mut keep_all = ChaCha8Rng::seed_from_u64(0);
        let (_, caches) = twin.forward_train(&x, &mut keep_all).unwrap();
        let dy = Tensor::new(vec![2, 3], r.clone()).unwrap();
        let (_, dx) = twin.backward_with_input(&caches, &dy).unwrap();
        let mut xv = x.data().to_vec();
        let nx = numeric(&mut xv, &mut |xv| {
            dot(net.forward_eval(&Tensor::new(x.shape().to_vec(), xv.to_vec()).unwrap()).unwrap().data(), &r)
        });
        worst = worst.max(rel_err(dx.data(), &nx));

        // Train mode with a fixed mask.
        let mask: Vec<f64> = (0..10).map(|_| if rng.random_bool(0.5) { 2.0 } else { 0.0 }).collect();
        let a = rand_tensor(&mut rng, &[2, 5]);
        let r = rand_vec(&mut rng, 10);
        let da = apply_mask(&Tensor::new(vec![2, 5], r.clone()).unwrap(), &mask).unwrap();
        let mut av = a.data().to_vec();
        let na = numeric(&mut av, &mut |av| {
            dot(apply_mask(&Tensor::new(vec![2, 5], av.to_vec()).unwrap(), &mask).unwrap().data(), &r)
        });
        worst = worst.max(rel_err(da.data(), &na));
    }
    worst
}

pub fn softmax_xent_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = rand_tensor(&mut rng, &[4, 5]);
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..5)).collect();
        let (_, d, _) = softmax_cross_entropy(&logits, &labels).unwrap();
        let mut lv = logits.data().to_vec();
        let nl = numeric(&mut lv, &mut |lv| {
            softmax_cross_entropy(&Tensor::new(vec![4, 5], lv.to_vec()).unwrap(), &labels).unwrap().0
        });
        worst = worst.max(rel_err(d.data(), &nl));
    }
    worst
}

pub fn network_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    let spec: NetworkSpec = "conv3d(2x2x2,3) -> batch_norm -> relu -> max_pool3d(1x2x2) -> flatten -> dense(5) \
                             -> relu -> dropout(0.3) -> dense(classes) -> softmax"
        .parse()
        .unwrap();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::<f64>::build(&spec, [3, 5, 5, 1], 3, 0.3, 0.5, seed).unwrap();
        let x = rand_tensor(&mut rng, &[3, 3, 5, 5, 1]);
        let labels = [0usize, 2, 1];
        let loss_of = |net: &mut Network<f64>| {
            let (logits, caches) = net.forward_train(&x, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            (softmax_cross_entropy(&logits, &labels).unwrap(), caches)
        };
        let ((_, dlogits, _), caches) = loss_of(&mut net);
        let grads = net.backward(&caches, &dlogits).unwrap();
        let analytic: Vec<f64> = grads.concat();
        let mut numeric_g = Vec::new();
        for p in 0..grads.len() {
            for i in 0..grads[p].len() {
                let orig = net.params()[p][i];
                net.params_mut()[p][i] = orig + H;
                let up = loss_of(&mut net).0 .0;
                net.params_mut()[p][i] = orig - H;
                let down = loss_of(&mut net).0 .0;
                net.params_mut()[p][i] = orig;
                numeric_g.push((up - down) / (2.0 * H));
            }
        }
        worst = worst.max(rel_err(&analytic, &numeric_g));
    }
    worst
}

/// Direct loop-nest convolution used as a reference.
fn conv_oracle(x: &[f32], xs: [usize; 5], w: &[f32], k: [usize; 3], s: [usize; 3], b: &[f32], cout: usize) -> Vec<f32> {
    let [n, t, h, wd, cin] = xs;
    let ot = (t - k[0]) / s[0] + 1;
    let oh = (h - k[1]) / s[1] + 1;
    let ow = (wd - k[2]) / s[2] + 1;
    let mut out = vec![0.0f32; n * ot * oh * ow * cout];
    for bi in 0..n {
        for to in 0..ot {
            for ho in 0..oh {
                for wo in 0..ow {
                    for co in 0..cout {
                        let mut acc = b[co] as f64;
                        for dt in 0..k[0] {
                            for dh in 0..k[1] {
                                for dw in 0..k[2] {
                                    for ci in 0..cin {
                                        let xi = (((bi * t + to * s[0] + dt) * h + ho * s[1] + dh) * wd + wo * s[2] + dw)
                                            * cin
                                            + ci;
                                        let wi = (((dt * k[1] + dh) * k[2] + dw) * cin + ci) * cout + co;
                                        acc += x[xi] as f64 * w[wi] as f64;
                                    }
                                }
                            }
                        }
                        out[(((bi * ot + to) * oh + ho) * ow + wo) * cout + co] = acc as f32;
                    }
                }
            }
        }
    }
    out
}

/// Largest absolute difference between conv3d and the loop oracle.
pub fn conv_oracle_error(seeds: u64) -> f64 {
    let mut worst = 0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = [rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4)];
        let s = [rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(1..=2)];
        let xs = [2, 5, 9, 8, rng.random_range(1..=3)];
        let cout = [1, 2, 3, 4, 8, 16][rng.random_range(0..6usize)];
        let mut conv = Conv3d::<f32>::zeros(k, s, xs[4], cout);
        conv.weight = (0..conv.weight.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        conv.bias = (0..cout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f32> = (0..xs.iter().product()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = conv.forward(&Tensor::new(xs.to_vec(), x.clone()).unwrap()).unwrap();
        let want = conv_oracle(&x, xs, &conv.weight, k, s, &conv.bias, cout);
        if got.len() != want.len() {
            return f64::INFINITY;
        }
        for (a, b) in got.data().iter().zip(&want) {
            worst = worst.max((a - b).abs() as f64);
        }
    }
    worst
}
