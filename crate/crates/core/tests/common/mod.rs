//! Independent f64 reference implementations used as test oracles.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordlab::cornet::Network;
use wordlab::stimgen::render::{CANVAS_H, CANVAS_W};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct-loop convolution of a c x h x w map.
#[allow(clippy::too_many_arguments)]
pub fn conv(x: &[f64], c: usize, h: usize, w: usize, wt: &[f64], o: usize, k: usize, b: &[f64], stride: usize, pad: usize) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut y = vec![0.0; o * oh * ow];
    for oc in 0..o {
        for i in 0..oh {
            for j in 0..ow {
                let mut s = b[oc];
                for ic in 0..c {
                    for di in 0..k {
                        for dj in 0..k {
                            let r = (i * stride + di) as isize - pad as isize;
                            let q = (j * stride + dj) as isize - pad as isize;
                            if r >= 0 && q >= 0 && (r as usize) < h && (q as usize) < w {
                                s += wt[((oc * c + ic) * k + di) * k + dj] * x[(ic * h + r as usize) * w + q as usize];
                            }
                        }
                    }
                }
                y[(oc * oh + i) * ow + j] = s;
            }
        }
    }
    (y, oh, ow)
}

/// Max pooling where padded cells never win.
pub fn maxpool(x: &[f64], c: usize, h: usize, w: usize, k: usize, stride: usize, pad: usize) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut y = vec![f64::NEG_INFINITY; c * oh * ow];
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                for di in 0..k {
                    for dj in 0..k {
                        let r = (i * stride + di) as isize - pad as isize;
                        let q = (j * stride + dj) as isize - pad as isize;
                        if r >= 0 && q >= 0 && (r as usize) < h && (q as usize) < w {
                            let v = x[(ch * h + r as usize) * w + q as usize];
                            let o = &mut y[(ch * oh + i) * ow + j];
                            *o = o.max(v);
                        }
                    }
                }
            }
        }
    }
    (y, oh, ow)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn gap(x: &[f64], c: usize, hw: usize) -> Vec<f64> {
    (0..c).map(|i| x[i * hw..(i + 1) * hw].iter().sum::<f64>() / hw as f64).collect()
}

pub fn linear(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter().enumerate().map(|(i, bi)| bi + (0..n).map(|j| w[i * n + j] * x[j]).sum::<f64>()).collect()
}

pub fn xent(z: &[f64], label: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[label]
}

/// Central difference of `f` at `x` along every coordinate.
pub fn fd_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let v = p[i];
            p[i] = v + h;
            let up = f(&p);
            p[i] = v - h;
            let down = f(&p);
            p[i] = v;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest entry error relative to the largest reference magnitude.
pub fn rel_error(analytic: &[f32], reference: &[f64]) -> f64 {
    assert_eq!(analytic.len(), reference.len());
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
    analytic.iter().zip(reference).map(|(&a, &r)| (a as f64 - r).abs()).fold(0.0, f64::max) / scale
}

pub fn random_vec(r: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

/// Values rounded to f32 so both implementations see identical inputs.
pub fn f32_exact(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x as f32 as f64).collect()
}

/// f64 forward pass of a network from its parameters, returning V1..IT,
/// H and output activations.
pub fn network_forward(net: &Network, image: &[f64]) -> Vec<Vec<f64>> {
    let cfg = net.config();
    let p: Vec<Vec<f64>> = net.params().iter().map(|t| t.data().iter().map(|&v| v as f64).collect()).collect();
    let mut x: Vec<f64> = image.iter().map(|v| 2.0 * v - 1.0).collect();
    let (mut c, mut h, mut w) = (1, CANVAS_H, CANVAS_W);
    let mut outs = Vec::new();
    for b in 0..4 {
        let (k, s, pd) = if b == 0 { (7, 2, 3) } else { (3, 1, 1) };
        let o = cfg.channels[b];
        let (y, oh, ow) = conv(&x, c, h, w, &p[2 * b], o, k, &p[2 * b + 1], s, pd);
        let (y, ph, pw) = maxpool(&relu(&y), o, oh, ow, 3, 2, 1);
        outs.push(y.clone());
        x = y;
        (c, h, w) = (o, ph, pw);
    }
    let hv = gap(&x, c, h * w);
    outs.push(hv.clone());
    outs.push(linear(&hv, &p[8], &p[9]));
    outs
}

/// Accelerated proximal gradient on (b, b0) with the intercept unpenalized.
pub fn fista(x: &[f64], p: usize, y: &[f64], lambda: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let nf = n as f64;
    // Lipschitz bound from the Frobenius norm of [X 1] / sqrt(N)
    let lip = (x.iter().map(|v| v * v).sum::<f64>() + nf) / nf;
    let step = 1.0 / lip;
    let mut z = vec![0.0; p + 1];
    let mut prev = z.clone();
    let mut cur = z.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let mut grad = vec![0.0; p + 1];
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            let res = z[p] + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - y[i];
            for j in 0..p {
                grad[j] += row[j] * res / nf;
            }
            grad[p] += res / nf;
        }
        for j in 0..=p {
            let v = z[j] - step * grad[j];
            cur[j] = if j == p { v } else { v.signum() * (v.abs() - step * lambda).max(0.0) };
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        for j in 0..=p {
            z[j] = cur[j] + (t - 1.0) / t_next * (cur[j] - prev[j]);
        }
        prev.clone_from(&cur);
        t = t_next;
    }
    let b0 = cur[p];
    cur.truncate(p);
    (cur, b0)
}

/// A 60-entry design (10 x 6) and response with two true coefficients.
pub fn random_lasso_problem(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let x: Vec<f64> = (0..60).map(|_| r.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..10).map(|i| x[i * 6] * 2.0 - x[i * 6 + 3] + r.random_range(-0.3..0.3)).collect();
    (x, y)
}

/// Sylvester Hadamard matrix of order `n` (a power of two), row-major.
pub fn hadamard(n: usize) -> Vec<f64> {
    let mut h = vec![1.0];
    let mut m = 1;
    while m < n {
        let mut next = vec![0.0; 4 * m * m];
        for i in 0..m {
            for j in 0..m {
                let v = h[i * m + j];
                next[i * 2 * m + j] = v;
                next[i * 2 * m + j + m] = v;
                next[(i + m) * 2 * m + j] = v;
                next[(i + m) * 2 * m + j + m] = -v;
            }
        }
        h = next;
        m *= 2;
    }
    h
}
