//! Single-sample forward ops. Each returns its output together with an
//! [`OpRecord`] holding whatever the adjoint needs.

use super::kernels::{conv_backward, conv_forward, pool_backward, pool_forward, ConvGeom, PoolGeom};
use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Conv2d,
    MaxPool2d,
    Relu,
    GlobalAvgPool,
    Linear,
    SoftmaxXent,
}

/// Saved state of one forward op.
#[derive(Clone, Debug)]
pub struct OpRecord {
    kind: OpKind,
    input_shapes: Vec<Vec<usize>>,
    output_shape: Vec<usize>,
    saved: Saved,
}

#[derive(Clone, Debug)]
enum Saved {
    Conv {
        geom: ConvGeom,
        weight: Vec<f32>,
        cols: Vec<f32>,
    },
    Pool {
        argmax: Vec<u32>,
    },
    Relu {
        mask: Vec<bool>,
    },
    Gap,
    Linear {
        input: Vec<f32>,
        weight: Vec<f32>,
    },
    Xent {
        probs: Vec<f32>,
        label: usize,
    },
}

impl OpRecord {
    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn input_shapes(&self) -> &[Vec<usize>] {
        &self.input_shapes
    }
}

/// 2-D convolution of a C x H x W input with an O x C x Kh x Kw kernel.
/// Padding is zero-filled.
pub fn conv2d(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, OpRecord)> {
    x.expect_rank("conv2d", "input", 3)?;
    w.expect_rank("conv2d", "weight", 4)?;
    let (c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (o, wc, kh, kw) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
    if wc != c {
        return Err(Error::shape(
            "conv2d",
            format!("input has {c} channels but weight expects {wc}"),
        ));
    }
    b.expect_shape("conv2d", "bias", &[o])?;
    if stride == 0 {
        return Err(Error::InvalidArgument("conv2d stride must be positive".into()));
    }
    if kh > h + 2 * pad || kw > wd + 2 * pad {
        return Err(Error::shape(
            "conv2d",
            format!("kernel {kh}x{kw} larger than padded input {}x{}", h + 2 * pad, wd + 2 * pad),
        ));
    }
    let geom = ConvGeom {
        c,
        h,
        w: wd,
        o,
        kh,
        kw,
        stride,
        pad,
    };
    let (cols, y) = conv_forward(x.data(), 1, &geom, w.data(), b.data());
    let out_shape = vec![o, geom.out_h(), geom.out_w()];
    let rec = OpRecord {
        kind: OpKind::Conv2d,
        input_shapes: vec![x.shape().to_vec(), w.shape().to_vec(), b.shape().to_vec()],
        output_shape: out_shape.clone(),
        saved: Saved::Conv {
            geom,
            weight: w.data().to_vec(),
            cols,
        },
    };
    Ok((Tensor::new(out_shape, y)?, rec))
}

/// Max pooling of a C x H x W input; padded cells never win.
pub fn maxpool2d(
    x: &Tensor,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, OpRecord)> {
    x.expect_rank("maxpool2d", "input", 3)?;
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if h < 1 || w < 1 {
        return Err(Error::shape("maxpool2d", "empty spatial map"));
    }
    if stride == 0 || kernel == 0 || pad >= kernel {
        return Err(Error::InvalidArgument(format!(
            "maxpool2d needs kernel > pad and stride > 0 (k={kernel}, s={stride}, p={pad})"
        )));
    }
    if kernel > h + 2 * pad || kernel > w + 2 * pad {
        return Err(Error::shape("maxpool2d", "kernel larger than padded input"));
    }
    let geom = PoolGeom {
        h,
        w,
        k: kernel,
        stride,
        pad,
    };
    let (y, argmax) = pool_forward(x.data(), c, &geom);
    let out_shape = vec![c, geom.out_h(), geom.out_w()];
    let rec = OpRecord {
        kind: OpKind::MaxPool2d,
        input_shapes: vec![x.shape().to_vec()],
        output_shape: out_shape.clone(),
        saved: Saved::Pool { argmax },
    };
    Ok((Tensor::new(out_shape, y)?, rec))
}

pub fn relu(x: &Tensor) -> (Tensor, OpRecord) {
    let mask: Vec<bool> = x.data().iter().map(|&v| v > 0.0).collect();
    let y = Tensor::from_fn(x.shape(), |i| if mask[i] { x.data()[i] } else { 0.0 });
    let rec = OpRecord {
        kind: OpKind::Relu,
        input_shapes: vec![x.shape().to_vec()],
        output_shape: x.shape().to_vec(),
        saved: Saved::Relu { mask },
    };
    (y, rec)
}

/// Channel means of a C x H x W map.
pub fn global_avg_pool(x: &Tensor) -> Result<(Tensor, OpRecord)> {
    x.expect_rank("global_avg_pool", "input", 3)?;
    let c = x.shape()[0];
    let hw = x.shape()[1] * x.shape()[2];
    let y: Vec<f32> = x
        .data()
        .chunks_exact(hw)
        .map(|ch| ch.iter().sum::<f32>() / hw as f32)
        .collect();
    let rec = OpRecord {
        kind: OpKind::GlobalAvgPool,
        input_shapes: vec![x.shape().to_vec()],
        output_shape: vec![c],
        saved: Saved::Gap,
    };
    Ok((Tensor::vector(y), rec))
}

/// `W x + b` for a length-N input and M x N weight.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(Tensor, OpRecord)> {
    x.expect_rank("linear", "input", 1)?;
    w.expect_rank("linear", "weight", 2)?;
    let (m, n) = (w.shape()[0], w.shape()[1]);
    if x.len() != n {
        return Err(Error::shape(
            "linear",
            format!("input length {} but weight is {m}x{n}", x.len()),
        ));
    }
    b.expect_shape("linear", "bias", &[m])?;
    let y: Vec<f32> = (0..m)
        .map(|i| {
            let row = &w.data()[i * n..(i + 1) * n];
            b.data()[i] + row.iter().zip(x.data()).map(|(a, v)| a * v).sum::<f32>()
        })
        .collect();
    let rec = OpRecord {
        kind: OpKind::Linear,
        input_shapes: vec![x.shape().to_vec(), w.shape().to_vec(), b.shape().to_vec()],
        output_shape: vec![m],
        saved: Saved::Linear {
            input: x.data().to_vec(),
            weight: w.data().to_vec(),
        },
    };
    Ok((Tensor::vector(y), rec))
}

/// Softmax cross-entropy against one class label. Returns `(loss, probs, record)`;
/// the record's adjoint takes a length-1 upstream (dL).
pub fn softmax_xent(logits: &Tensor, label: usize) -> Result<(f32, Tensor, OpRecord)> {
    logits.expect_rank("softmax_xent", "logits", 1)?;
    let k = logits.len();
    if label >= k {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {k} classes"
        )));
    }
    let (loss, probs) = softmax_xent_slice(logits.data(), label);
    let rec = OpRecord {
        kind: OpKind::SoftmaxXent,
        input_shapes: vec![vec![k]],
        output_shape: vec![1],
        saved: Saved::Xent {
            probs: probs.clone(),
            label,
        },
    };
    Ok((loss, Tensor::vector(probs), rec))
}

/// Max-subtracted softmax and `-ln p[label]`, computed in f64.
pub(crate) fn softmax_xent_slice(logits: &[f32], label: usize) -> (f32, Vec<f32>) {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = logits.iter().map(|&z| (z as f64 - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let probs: Vec<f32> = exps.iter().map(|e| (e / total) as f32).collect();
    let loss = (total.ln() - (logits[label] as f64 - max)) as f32;
    (loss, probs)
}

/// Gradients of each recorded input given the gradient of the op's output.
///
/// Conv and linear return `[dx, dweight, dbias]`; the others return `[dx]`.
pub fn adjoint(record: &OpRecord, upstream: &Tensor) -> Result<Vec<Tensor>> {
    if upstream.shape() != record.output_shape.as_slice() {
        return Err(Error::shape(
            "adjoint",
            format!(
                "upstream shape {:?} does not match recorded {:?} output {:?}",
                upstream.shape(),
                record.kind,
                record.output_shape
            ),
        ));
    }
    let g = upstream.data();
    let shapes = &record.input_shapes;
    let out = match &record.saved {
        Saved::Conv { geom, weight, cols } => {
            let grads = conv_backward(g, 1, geom, weight, cols, true);
            vec![
                Tensor::new(shapes[0].clone(), grads.dx.expect("requested dx"))?,
                Tensor::new(shapes[1].clone(), grads.dweight)?,
                Tensor::new(shapes[2].clone(), grads.dbias)?,
            ]
        }
        Saved::Pool { argmax } => {
            let n = shapes[0].iter().product();
            vec![Tensor::new(shapes[0].clone(), pool_backward(g, argmax, n))?]
        }
        Saved::Relu { mask } => {
            if mask.len() != g.len() {
                return Err(Error::shape("adjoint", "stale relu record"));
            }
            let dx = g
                .iter()
                .zip(mask)
                .map(|(&v, &m)| if m { v } else { 0.0 })
                .collect();
            vec![Tensor::new(shapes[0].clone(), dx)?]
        }
        Saved::Gap => {
            let hw = shapes[0][1] * shapes[0][2];
            let dx = g
                .iter()
                .flat_map(|&v| std::iter::repeat_n(v / hw as f32, hw))
                .collect();
            vec![Tensor::new(shapes[0].clone(), dx)?]
        }
        Saved::Linear { input, weight } => {
            let (m, n) = (shapes[1][0], shapes[1][1]);
            let mut dx = vec![0.0f32; n];
            let mut dw = vec![0.0f32; m * n];
            for i in 0..m {
                let row = &weight[i * n..(i + 1) * n];
                for j in 0..n {
                    dx[j] += g[i] * row[j];
                    dw[i * n + j] = g[i] * input[j];
                }
            }
            vec![
                Tensor::vector(dx),
                Tensor::new(vec![m, n], dw)?,
                Tensor::vector(g.to_vec()),
            ]
        }
        Saved::Xent { probs, label } => {
            let dl = g[0];
            let dz = probs
                .iter()
                .enumerate()
                .map(|(i, &p)| dl * (p - if i == *label { 1.0 } else { 0.0 }))
                .collect();
            vec![Tensor::vector(dz)]
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f32]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn conv_scalar_multiply_add() {
        let (y, _) = conv2d(&t(&[1, 1, 1], &[2.0]), &t(&[1, 1, 1, 1], &[3.0]), &t(&[1], &[1.0]), 1, 0).unwrap();
        assert_eq!(y.data(), &[7.0]);
    }

    #[test]
    fn conv_all_ones_padded() {
        let x = Tensor::full(&[1, 3, 3], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3], 1.0);
        let (y, _) = conv2d(&x, &w, &Tensor::zeros(&[1]), 1, 1).unwrap();
        // hand-enumerated window sums
        assert_eq!(y.data(), &[4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn conv_delta_kernel_is_identity() {
        let x = Tensor::from_fn(&[2, 4, 5], |i| (i as f32 * 0.37).sin());
        let mut w = Tensor::zeros(&[2, 2, 3, 3]);
        w.set(&[0, 0, 1, 1], 1.0);
        w.set(&[1, 1, 1, 1], 1.0);
        let (y, _) = conv2d(&x, &w, &Tensor::zeros(&[2]), 1, 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let err = conv2d(
            &Tensor::zeros(&[2, 3, 3]),
            &Tensor::zeros(&[1, 3, 3, 3]),
            &Tensor::zeros(&[1]),
            1,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Shape { op: "conv2d", .. }), "{err}");
    }

    #[test]
    fn stride_two_output_size() {
        let x = Tensor::zeros(&[1, 32, 128]);
        let w = Tensor::zeros(&[4, 1, 7, 7]);
        let (y, _) = conv2d(&x, &w, &Tensor::zeros(&[4]), 2, 3).unwrap();
        assert_eq!(y.shape(), &[4, 16, 64]);
    }

    #[test]
    fn maxpool_ramp() {
        let x = Tensor::from_fn(&[1, 4, 4], |i| i as f32);
        let (y, _) = maxpool2d(&x, 3, 2, 1).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), &[5.0, 7.0, 13.0, 15.0]);
    }

    #[test]
    fn maxpool_constant_and_spike() {
        let x = Tensor::full(&[2, 5, 6], -3.5);
        let (y, _) = maxpool2d(&x, 3, 2, 1).unwrap();
        assert!(y.data().iter().all(|&v| v == -3.5));
        assert_eq!(y.shape(), &[2, 3, 3]);

        let mut x = Tensor::zeros(&[1, 5, 5]);
        x.set(&[0, 2, 2], 4.0);
        let (y, _) = maxpool2d(&x, 3, 2, 1).unwrap();
        // windows start at -1, 1, 3; only the middle one covers row/col 2
        for r in 0..3 {
            for c in 0..3 {
                let covered = r == 1 && c == 1;
                assert_eq!(y.at(&[0, r, c]), if covered { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn maxpool_rejects_empty() {
        assert!(maxpool2d(&Tensor::zeros(&[1, 1]), 3, 2, 1).is_err());
    }

    #[test]
    fn relu_and_gap_and_linear() {
        let (y, rec) = relu(&t(&[3], &[-1.0, 0.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let g = adjoint(&rec, &t(&[3], &[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(g[0].data(), &[0.0, 0.0, 1.0]);

        let (y, _) = global_avg_pool(&t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(y.data(), &[2.5]);

        let x = t(&[3], &[0.5, -2.0, 7.0]);
        let eye = Tensor::from_fn(&[3, 3], |i| if i % 4 == 0 { 1.0 } else { 0.0 });
        let (y, _) = linear(&x, &eye, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(y, x);
        assert!(linear(&x, &Tensor::zeros(&[2, 4]), &Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn relu_adjoint_example() {
        let (_, rec) = relu(&t(&[2], &[-1.0, 2.0]));
        let g = adjoint(&rec, &t(&[2], &[1.0, 1.0])).unwrap();
        assert_eq!(g[0].data(), &[0.0, 1.0]);
    }

    #[test]
    fn xent_examples() {
        let (loss, probs, _) = softmax_xent(&Tensor::zeros(&[7]), 3).unwrap();
        assert!((loss as f64 - 7f64.ln()).abs() < 1e-6);
        assert!((probs.sum() - 1.0).abs() < 1e-6);

        let (loss, probs, rec) = softmax_xent(&t(&[2], &[0.0, 3f32.ln()]), 1).unwrap();
        assert!((probs.data()[0] - 0.25).abs() < 1e-7);
        assert!((probs.data()[1] - 0.75).abs() < 1e-7);
        assert!((loss as f64 - 0.287_682_072).abs() < 1e-6);
        let g = adjoint(&rec, &t(&[1], &[1.0])).unwrap();
        assert!((g[0].data()[0] - 0.25).abs() < 1e-7);
        assert!((g[0].data()[1] + 0.25).abs() < 1e-7);

        let (loss, probs, _) = softmax_xent(&t(&[3], &[1000.0, 0.0, -5.0]), 0).unwrap();
        assert!(loss.abs() < 1e-6 && loss.is_finite());
        assert!(probs.all_finite());

        assert!(softmax_xent(&Tensor::zeros(&[3]), 3).is_err());
    }

    #[test]
    fn maxpool_adjoint_routes_to_argmax() {
        let x = Tensor::from_fn(&[1, 4, 4], |i| ((i * 7) % 11) as f32);
        let (y, rec) = maxpool2d(&x, 3, 2, 1).unwrap();
        let up = Tensor::from_fn(y.shape(), |i| 1.0 + i as f32);
        let g = adjoint(&rec, &up).unwrap();
        assert!((g[0].sum() - up.sum()).abs() < 1e-9);
        for (i, &v) in g[0].data().iter().enumerate() {
            if v != 0.0 {
                assert!(y.data().contains(&x.data()[i]));
            }
        }
    }

    #[test]
    fn adjoint_rejects_wrong_upstream() {
        let (_, rec) = relu(&Tensor::zeros(&[4]));
        assert!(adjoint(&rec, &Tensor::zeros(&[5])).is_err());
    }
}
