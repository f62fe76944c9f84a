//! Batched conv/pool kernels on flat NCHW slices.
//!
//! Convolution is lowered to im2col + sgemm. The column matrix is laid out
//! K x (N*P) with K = C*kh*kw and P = out_h*out_w, so one GEMM covers the
//! whole minibatch.

/// `c = alpha * a * b + beta * c` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    rsa: usize,
    csa: usize,
    b: &[f32],
    rsb: usize,
    csb: usize,
    beta: f32,
    c: &mut [f32],
    rsc: usize,
    csc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    debug_assert!(c.len() > (m - 1) * rsc + (n - 1) * csc);
    // SAFETY: bounds of all three operands are checked above for the
    // stride pattern sgemm walks.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub o: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.pad - self.kh) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.pad - self.kw) / self.stride + 1
    }

    pub fn k(&self) -> usize {
        self.c * self.kh * self.kw
    }

    pub fn p(&self) -> usize {
        self.out_h() * self.out_w()
    }

    pub fn in_len(&self) -> usize {
        self.c * self.h * self.w
    }
}

/// Output columns `ox` whose input column `ox*stride + k - pad` is inside
/// `0..w`.
fn valid_range(out: usize, k: usize, stride: usize, pad: usize, w: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k).div_ceil(stride);
    // largest ox with ox*stride + k < w + pad
    let hi = if w + pad > k { ((w + pad - k - 1) / stride + 1).min(out) } else { 0 };
    (lo.min(hi), hi)
}

fn im2col(x: &[f32], g: &ConvGeom, cols: &mut [f32], ld: usize, col0: usize) {
    let (oh, ow) = (g.out_h(), g.out_w());
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst = &mut cols[row * ld + col0..row * ld + col0 + oh * ow];
                let (lo, hi) = valid_range(ow, kj, g.stride, g.pad, g.w);
                for oy in 0..oh {
                    let iy = (oy * g.stride + ki) as isize - g.pad as isize;
                    let line = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= g.h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    line[..lo].fill(0.0);
                    line[hi..].fill(0.0);
                    if lo == hi {
                        continue;
                    }
                    let start = lo * g.stride + kj - g.pad;
                    if g.stride == 1 {
                        line[lo..hi].copy_from_slice(&src[start..start + hi - lo]);
                    } else {
                        for (v, &s) in line[lo..hi].iter_mut().zip(src[start..].iter().step_by(g.stride)) {
                            *v = s;
                        }
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f32], g: &ConvGeom, ld: usize, col0: usize, dx: &mut [f32]) {
    let (oh, ow) = (g.out_h(), g.out_w());
    for c in 0..g.c {
        let plane = &mut dx[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src = &cols[row * ld + col0..row * ld + col0 + oh * ow];
                let (lo, hi) = valid_range(ow, kj, g.stride, g.pad, g.w);
                if lo >= hi {
                    continue;
                }
                let start = lo * g.stride + kj - g.pad;
                for oy in 0..oh {
                    let iy = (oy * g.stride + ki) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let line = &src[oy * ow + lo..oy * ow + hi];
                    let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (d, &v) in dst[start..].iter_mut().step_by(g.stride).zip(line) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// Spatial outputs per image above which each image gets its own GEMM
/// instead of sharing one wide GEMM across the batch.
const PER_IMAGE_MIN_P: usize = 256;

fn per_image(g: &ConvGeom) -> bool {
    g.p() >= PER_IMAGE_MIN_P
}

/// Forward convolution over `n` images. Returns the column matrix (kept for
/// the weight gradient) and the N x O x P output. Large maps store the
/// columns image by image (N x K x P), small ones as one K x (N*P) matrix.
pub(crate) fn conv_forward(
    x: &[f32],
    n: usize,
    g: &ConvGeom,
    weight: &[f32],
    bias: &[f32],
) -> (Vec<f32>, Vec<f32>) {
    let (k, p) = (g.k(), g.p());
    let mut cols = vec![0.0f32; k * n * p];
    let mut y = vec![0.0f32; n * g.o * p];
    if per_image(g) {
        for i in 0..n {
            let ci = &mut cols[i * k * p..(i + 1) * k * p];
            im2col(&x[i * g.in_len()..(i + 1) * g.in_len()], g, ci, p, 0);
            let yi = &mut y[i * g.o * p..(i + 1) * g.o * p];
            for (row, &b) in yi.chunks_exact_mut(p).zip(bias) {
                row.fill(b);
            }
            gemm(g.o, k, p, weight, k, 1, ci, p, 1, 1.0, yi, p, 1);
        }
        return (cols, y);
    }
    let ld = n * p;
    for i in 0..n {
        im2col(&x[i * g.in_len()..(i + 1) * g.in_len()], g, &mut cols, ld, i * p);
    }
    let mut ymat = vec![0.0f32; g.o * ld];
    gemm(g.o, k, ld, weight, k, 1, &cols, ld, 1, 0.0, &mut ymat, ld, 1);
    for i in 0..n {
        for o in 0..g.o {
            let src = &ymat[o * ld + i * p..o * ld + (i + 1) * p];
            let dst = &mut y[(i * g.o + o) * p..(i * g.o + o + 1) * p];
            let b = bias[o];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s + b;
            }
        }
    }
    (cols, y)
}

pub(crate) struct ConvGrads {
    pub dweight: Vec<f32>,
    pub dbias: Vec<f32>,
    pub dx: Option<Vec<f32>>,
}

/// Adjoint of [`conv_forward`]. `dy` is N x O x P.
pub(crate) fn conv_backward(
    dy: &[f32],
    n: usize,
    g: &ConvGeom,
    weight: &[f32],
    cols: &[f32],
    need_dx: bool,
) -> ConvGrads {
    let (k, p) = (g.k(), g.p());
    let mut dbias = vec![0.0f32; g.o];
    for plane in dy.chunks_exact(p).enumerate() {
        dbias[plane.0 % g.o] += plane.1.iter().sum::<f32>();
    }
    let mut dweight = vec![0.0f32; g.o * k];
    if per_image(g) {
        let mut dx = need_dx.then(|| vec![0.0f32; n * g.in_len()]);
        let mut dcols = vec![0.0f32; if need_dx { k * p } else { 0 }];
        for i in 0..n {
            let dyi = &dy[i * g.o * p..(i + 1) * g.o * p];
            let ci = &cols[i * k * p..(i + 1) * k * p];
            gemm(g.o, p, k, dyi, p, 1, ci, 1, p, 1.0, &mut dweight, k, 1);
            if let Some(dx) = dx.as_mut() {
                gemm(k, g.o, p, weight, 1, k, dyi, p, 1, 0.0, &mut dcols, p, 1);
                col2im(&dcols, g, p, 0, &mut dx[i * g.in_len()..(i + 1) * g.in_len()]);
            }
        }
        return ConvGrads {
            dweight,
            dbias,
            dx,
        };
    }
    let ld = n * p;
    let mut dymat = vec![0.0f32; g.o * ld];
    for i in 0..n {
        for o in 0..g.o {
            let src = &dy[(i * g.o + o) * p..(i * g.o + o + 1) * p];
            dymat[o * ld + i * p..o * ld + (i + 1) * p].copy_from_slice(src);
        }
    }
    // dW (O x K) = dY (O x NP) * cols^T (NP x K)
    gemm(g.o, ld, k, &dymat, ld, 1, cols, 1, ld, 0.0, &mut dweight, k, 1);
    let dx = need_dx.then(|| {
        let mut dcols = vec![0.0f32; k * ld];
        // dcols (K x NP) = W^T (K x O) * dY (O x NP)
        gemm(k, g.o, ld, weight, 1, k, &dymat, ld, 1, 0.0, &mut dcols, ld, 1);
        let mut dx = vec![0.0f32; n * g.in_len()];
        for i in 0..n {
            col2im(
                &dcols,
                g,
                ld,
                i * p,
                &mut dx[i * g.in_len()..(i + 1) * g.in_len()],
            );
        }
        dx
    });
    ConvGrads {
        dweight,
        dbias,
        dx,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PoolGeom {
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl PoolGeom {
    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.pad - self.k) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.pad - self.k) / self.stride + 1
    }
}

/// Max pooling over `planes` independent H x W planes. Padding acts as -inf.
/// Returns the pooled values and, per output, the flat input index that won
/// (first maximum in row-major window order).
pub(crate) fn pool_forward(x: &[f32], planes: usize, g: &PoolGeom) -> (Vec<f32>, Vec<u32>) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut y = vec![0.0f32; planes * oh * ow];
    let mut arg = vec![0u32; planes * oh * ow];
    for pl in 0..planes {
        let base = pl * g.h * g.w;
        let plane = &x[base..base + g.h * g.w];
        for oy in 0..oh {
            let y0 = (oy * g.stride) as isize - g.pad as isize;
            let ys = y0.max(0) as usize;
            let ye = ((y0 + g.k as isize) as usize).min(g.h);
            for ox in 0..ow {
                let x0 = (ox * g.stride) as isize - g.pad as isize;
                let xs = x0.max(0) as usize;
                let xe = ((x0 + g.k as isize) as usize).min(g.w);
                let mut best = f32::NEG_INFINITY;
                let mut best_i = ys * g.w + xs;
                for iy in ys..ye {
                    for ix in xs..xe {
                        let v = plane[iy * g.w + ix];
                        if v > best {
                            best = v;
                            best_i = iy * g.w + ix;
                        }
                    }
                }
                let o = pl * oh * ow + oy * ow + ox;
                y[o] = best;
                arg[o] = (base + best_i) as u32;
            }
        }
    }
    (y, arg)
}

pub(crate) fn pool_backward(dy: &[f32], argmax: &[u32], in_len: usize) -> Vec<f32> {
    let mut dx = vec![0.0f32; in_len];
    for (&g, &i) in dy.iter().zip(argmax) {
        dx[i as usize] += g;
    }
    dx
}
