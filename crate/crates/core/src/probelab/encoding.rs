//! Letter x position encoding models fitted with cross-validated Lasso.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::error::{Error, Result};
use crate::stimgen::glyphs::{GlyphSet, N_SYMBOLS};
use crate::stimgen::render::N_SLOTS;

pub const N_FEATURES: usize = N_SYMBOLS * N_SLOTS;
pub const N_LAMBDAS: usize = 16;
pub const LAMBDA_RATIO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Left,
    Center,
    Edge,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Left, Scheme::Center, Scheme::Edge];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Left => "left",
            Scheme::Center => "center",
            Scheme::Edge => "edge",
        }
    }

    /// 0-based slot of letter `i` in a word of length `len`.
    pub fn slot(self, i: usize, len: usize) -> usize {
        match self {
            Scheme::Left => i,
            Scheme::Center => (N_SLOTS - len) / 2 + i,
            Scheme::Edge => {
                let head = len.div_ceil(2);
                if i < head {
                    i
                } else {
                    N_SLOTS - (len - i)
                }
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary (words x 208) matrix; feature `letter * 8 + slot`.
pub fn design_matrix(words: &[String], scheme: Scheme) -> Result<Vec<f64>> {
    let mut x = vec![0.0; words.len() * N_FEATURES];
    for (row, w) in words.iter().enumerate() {
        let letters: Vec<usize> = w
            .chars()
            .map(|c| GlyphSet::symbol_index(c).flatten().ok_or(Error::UnknownSymbol(c)))
            .collect::<Result<_>>()?;
        let len = letters.len();
        if !(1..=N_SLOTS).contains(&len) {
            return Err(Error::InvalidArgument(format!("word {w:?} must have 1..=8 letters")));
        }
        for (i, &l) in letters.iter().enumerate() {
            x[row * N_FEATURES + l * N_SLOTS + scheme.slot(i, len)] = 1.0;
        }
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub fit_intercept: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-6,
            max_sweeps: 20_000,
            fit_intercept: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub sweeps: usize,
    /// Duality gap in objective units at exit.
    pub gap: f64,
}

/// Column-major centered design plus centered response.
struct Problem {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    col_sq: Vec<f64>,
    x_mean: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

impl Problem {
    fn new(x: &[f64], n: usize, p: usize, y: &[f64], rows: &[usize], center: bool) -> Self {
        let m = rows.len();
        let mut cols = vec![0.0; m * p];
        let mut x_mean = vec![0.0; p];
        for j in 0..p {
            let col = &mut cols[j * m..(j + 1) * m];
            for (c, &r) in col.iter_mut().zip(rows) {
                *c = x[r * p + j];
            }
            if center {
                let mu = col.iter().sum::<f64>() / m as f64;
                col.iter_mut().for_each(|v| *v -= mu);
                x_mean[j] = mu;
            }
        }
        debug_assert_eq!(x.len(), n * p);
        let col_sq = (0..p).map(|j| cols[j * m..(j + 1) * m].iter().map(|v| v * v).sum()).collect();
        let mut ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let y_mean = if center { ys.iter().sum::<f64>() / m as f64 } else { 0.0 };
        ys.iter_mut().for_each(|v| *v -= y_mean);
        Problem {
            n: m,
            p,
            cols,
            col_sq,
            x_mean,
            y: ys,
            y_mean,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    /// max |Xc^T yc| / n
    fn lambda_max(&self) -> f64 {
        (0..self.p)
            .map(|j| dot(self.col(j), &self.y).abs() / self.n as f64)
            .fold(0.0, f64::max)
    }

    fn residual(&self, b: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (j, &bj) in b.iter().enumerate() {
            if bj != 0.0 {
                axpy(-bj, self.col(j), &mut r);
            }
        }
        r
    }

    fn gap(&self, b: &[f64], r: &[f64], lambda: f64) -> f64 {
        let alpha = lambda * self.n as f64;
        let dual_norm = (0..self.p).map(|j| dot(self.col(j), r).abs()).fold(0.0, f64::max);
        let r2 = dot(r, r);
        let (scale, mut gap) = if dual_norm > alpha {
            let c = alpha / dual_norm;
            (c, 0.5 * (r2 + c * c * r2))
        } else {
            (1.0, r2)
        };
        gap += alpha * b.iter().map(|v| v.abs()).sum::<f64>() - scale * dot(r, &self.y);
        gap.max(0.0) / self.n as f64
    }

    /// Cyclic coordinate descent from `b` until the duality gap falls below
    /// `tol` (or updates vanish when `lambda` is zero). At least one sweep
    /// runs so a near-optimal start still gets its exact coordinate updates.
    fn solve(&self, b: &mut [f64], lambda: f64, opts: &LassoOptions) -> (usize, f64) {
        let nf = self.n as f64;
        let mut r = self.residual(b);
        let mut gap = self.gap(b, &r, lambda);
        let mut sweeps = 0;
        while (gap > opts.tol || sweeps == 0) && sweeps < opts.max_sweeps {
            let mut max_step: f64 = 0.0;
            for j in 0..self.p {
                if self.col_sq[j] == 0.0 {
                    b[j] = 0.0;
                    continue;
                }
                let z = self.col_sq[j] / nf;
                let rho = dot(self.col(j), &r) / nf + z * b[j];
                let new = soft(rho, lambda) / z;
                let delta = new - b[j];
                if delta != 0.0 {
                    axpy(-delta, self.col(j), &mut r);
                    b[j] = new;
                    max_step = max_step.max(delta.abs() * z.sqrt());
                }
            }
            sweeps += 1;
            gap = self.gap(b, &r, lambda);
            if lambda == 0.0 && max_step <= opts.tol * 1e-3 {
                break;
            }
        }
        (sweeps, gap)
    }

    fn intercept(&self, b: &[f64]) -> f64 {
        self.y_mean - dot(&self.x_mean, b)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

pub fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// (1/(2N)) * ||y - Xb - b0||^2 + lambda * ||b||_1 for a row-major X.
pub fn objective(x: &[f64], y: &[f64], b: &[f64], b0: f64, lambda: f64) -> f64 {
    let (n, p) = (y.len(), b.len());
    let mut loss = 0.0;
    for i in 0..n {
        let pred = b0 + dot(&x[i * p..(i + 1) * p], b);
        loss += (y[i] - pred) * (y[i] - pred);
    }
    loss / (2.0 * n as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

fn check_dims(x: &[f64], y: &[f64], p: usize) -> Result<usize> {
    let n = y.len();
    if p == 0 || n == 0 || x.len() != n * p {
        return Err(Error::shape("lasso", format!("X has {} values for {n} x {p}", x.len())));
    }
    Ok(n)
}

/// Lasso at one regularization weight with an unpenalized intercept.
pub fn lasso(x: &[f64], p: usize, y: &[f64], lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    let n = check_dims(x, y, p)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    let rows: Vec<usize> = (0..n).collect();
    let prob = Problem::new(x, n, p, y, &rows, opts.fit_intercept);
    let mut coef = vec![0.0; p];
    let (sweeps, gap) = prob.solve(&mut coef, lambda, opts);
    Ok(LassoFit {
        intercept: prob.intercept(&coef),
        coef,
        lambda,
        sweeps,
        gap,
    })
}

/// 16 log-spaced weights from `lambda_max` down to 1e-4 * `lambda_max`.
pub fn lambda_grid(lambda_max: f64) -> Vec<f64> {
    lambda_grid_with(lambda_max, N_LAMBDAS, LAMBDA_RATIO)
}

pub fn lambda_grid_with(lambda_max: f64, n: usize, ratio: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lambda_max];
    }
    (0..n).map(|i| lambda_max * ratio.powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub n_lambdas: usize,
    pub lambda_ratio: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            n_lambdas: N_LAMBDAS,
            lambda_ratio: LAMBDA_RATIO,
        }
    }
}

/// Largest useful weight for a design: max |Xc^T (y - mean y)| / N.
pub fn lambda_max(x: &[f64], p: usize, y: &[f64]) -> Result<f64> {
    let n = check_dims(x, y, p)?;
    let rows: Vec<usize> = (0..n).collect();
    Ok(Problem::new(x, n, p, y, &rows, true).lambda_max())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvFit {
    pub fit: LassoFit,
    /// Mean held-out correlation at the chosen weight.
    pub r_cv: f64,
    pub grid: Vec<f64>,
    pub mean_r: Vec<f64>,
    /// Constant response: nothing to fit.
    pub degenerate: bool,
}

/// K-fold (rows `i mod folds`) cross-validated Lasso. The weight maximizing
/// the mean held-out Pearson correlation wins (earlier, larger weights on
/// ties) and the model is refit on all rows.
pub fn lasso_cv(x: &[f64], p: usize, y: &[f64], grid: Option<&[f64]>, folds: usize, opts: &LassoOptions) -> Result<CvFit> {
    let n = check_dims(x, y, p)?;
    if folds < 2 || n < folds {
        return Err(Error::InvalidArgument(format!("{n} samples cannot be split into {folds} folds")));
    }
    let all: Vec<usize> = (0..n).collect();
    let full = Problem::new(x, n, p, y, &all, opts.fit_intercept);
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => lambda_grid(full.lambda_max()),
    };
    if y.iter().all(|&v| v == y[0]) || grid.is_empty() {
        let lambda = grid.first().copied().unwrap_or(0.0);
        return Ok(CvFit {
            fit: LassoFit {
                coef: vec![0.0; p],
                intercept: if opts.fit_intercept { y[0] } else { 0.0 },
                lambda,
                sweeps: 0,
                gap: 0.0,
            },
            r_cv: 0.0,
            mean_r: vec![0.0; grid.len()],
            grid,
            degenerate: true,
        });
    }
    let mut sum_r = vec![0.0; grid.len()];
    for f in 0..folds {
        let train: Vec<usize> = all.iter().copied().filter(|i| i % folds != f).collect();
        let test: Vec<usize> = all.iter().copied().filter(|i| i % folds == f).collect();
        let prob = Problem::new(x, n, p, y, &train, opts.fit_intercept);
        let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        let mut b = vec![0.0; p];
        for (g, &lambda) in grid.iter().enumerate() {
            prob.solve(&mut b, lambda, opts);
            let b0 = prob.intercept(&b);
            let pred: Vec<f64> = test.iter().map(|&i| b0 + dot(&x[i * p..(i + 1) * p], &b)).collect();
            sum_r[g] += pearson(&pred, &truth).unwrap_or(0.0);
        }
    }
    let mean_r: Vec<f64> = sum_r.iter().map(|s| s / folds as f64).collect();
    let mut best = 0;
    for (g, &r) in mean_r.iter().enumerate() {
        if r > mean_r[best] {
            best = g;
        }
    }
    let mut b = vec![0.0; p];
    let (mut sweeps, mut gap) = (0, 0.0);
    for &lambda in &grid[..=best] {
        (sweeps, gap) = full.solve(&mut b, lambda, opts);
    }
    Ok(CvFit {
        fit: LassoFit {
            intercept: full.intercept(&b),
            coef: b,
            lambda: grid[best],
            sweeps,
            gap,
        },
        r_cv: mean_r[best],
        grid,
        mean_r,
        degenerate: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingFit {
    pub scheme: Scheme,
    /// 26 x 8, letter-major.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub r_cv: f64,
    pub lambda: f64,
    pub degenerate: bool,
}

impl EncodingFit {
    pub fn coef_at(&self, letter: usize, slot: usize) -> f64 {
        self.coef[letter * N_SLOTS + slot]
    }

    /// Mean coefficient per slot across letters.
    pub fn slot_profile(&self) -> [f64; N_SLOTS] {
        let mut out = [0.0; N_SLOTS];
        for (s, o) in out.iter_mut().enumerate() {
            *o = (0..N_SYMBOLS).map(|l| self.coef_at(l, s)).sum::<f64>() / N_SYMBOLS as f64;
        }
        out
    }
}

/// Fit each unit's responses to the words under all three position schemes
/// with shared folds and a shared weight grid.
pub fn scheme_comparison(words: &[String], responses: &[Vec<f64>], cv: &CvConfig) -> Result<Vec<[EncodingFit; 3]>> {
    if cv.n_lambdas == 0 || !(cv.lambda_ratio > 0.0 && cv.lambda_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("bad weight grid: {cv:?}")));
    }
    let designs: Vec<Vec<f64>> = Scheme::ALL.iter().map(|&s| design_matrix(words, s)).collect::<Result<_>>()?;
    let opts = LassoOptions::default();
    responses
        .iter()
        .map(|y| {
            if y.len() != words.len() {
                return Err(Error::shape("scheme_comparison", format!("{} responses for {} words", y.len(), words.len())));
            }
            let lmax = designs
                .iter()
                .map(|x| lambda_max(x, N_FEATURES, y))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let grid = lambda_grid_with(lmax, cv.n_lambdas, cv.lambda_ratio);
            let fit = |k: usize| -> Result<EncodingFit> {
                let cv = lasso_cv(&designs[k], N_FEATURES, y, Some(&grid), cv.folds, &opts)?;
                Ok(EncodingFit {
                    scheme: Scheme::ALL[k],
                    coef: cv.fit.coef,
                    intercept: cv.fit.intercept,
                    r_cv: cv.r_cv,
                    lambda: cv.fit.lambda,
                    degenerate: cv.degenerate,
                })
            };
            Ok([fit(0)?, fit(1)?, fit(2)?])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningCurves {
    /// Mean normalized slot profile per peak-slot group; `None` if empty.
    pub curves: Vec<Option<[f64; N_SLOTS]>>,
    pub counts: [usize; N_SLOTS],
    pub fwhm: Vec<Option<f64>>,
    /// Units without a positive slot profile.
    pub excluded: usize,
}

/// Full width at half maximum of a curve peaking at `peak`, in slots, by
/// linear interpolation. A side that never drops below half before the end
/// of the range reuses the other side's half-width; if neither side drops
/// the width is the whole range.
pub fn fwhm(curve: &[f64], peak: usize) -> f64 {
    let half = curve[peak] / 2.0;
    let left = (0..peak).rev().find(|&i| curve[i] < half).map(|i| {
        let (a, b) = (curve[i], curve[i + 1]);
        (peak - i - 1) as f64 + (b - half) / (b - a)
    });
    let right = (peak + 1..curve.len()).find(|&i| curve[i] < half).map(|i| {
        let (a, b) = (curve[i - 1], curve[i]);
        (i - peak - 1) as f64 + (a - half) / (a - b)
    });
    match (left, right) {
        (Some(l), Some(r)) => l + r,
        (Some(h), None) | (None, Some(h)) => 2.0 * h,
        (None, None) => curve.len() as f64,
    }
}

/// Group units by the slot of their peak mean coefficient and average their
/// max-normalized slot profiles.
pub fn position_tuning_curves(fits: &[EncodingFit]) -> TuningCurves {
    let mut sums = [[0.0; N_SLOTS]; N_SLOTS];
    let mut counts = [0usize; N_SLOTS];
    let mut excluded = 0;
    for f in fits {
        let prof = f.slot_profile();
        let mut peak = 0;
        for s in 1..N_SLOTS {
            if prof[s] > prof[peak] {
                peak = s;
            }
        }
        if !(prof[peak] > 0.0) {
            excluded += 1;
            continue;
        }
        for s in 0..N_SLOTS {
            sums[peak][s] += prof[s] / prof[peak];
        }
        counts[peak] += 1;
    }
    let curves: Vec<Option<[f64; N_SLOTS]>> = (0..N_SLOTS)
        .map(|g| (counts[g] > 0).then(|| sums[g].map(|v| v / counts[g] as f64)))
        .collect();
    let fwhm = curves.iter().enumerate().map(|(g, c)| c.map(|c| fwhm(&c, g))).collect();
    TuningCurves {
        curves,
        counts,
        fwhm,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn s(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn slots_of(x: &[f64], row: usize) -> Vec<(usize, usize)> {
        (0..N_FEATURES)
            .filter(|&f| x[row * N_FEATURES + f] == 1.0)
            .map(|f| (f / N_SLOTS, f % N_SLOTS + 1))
            .collect()
    }

    #[test]
    fn scheme_slots_for_word() {
        let w = s(&["WORD"]);
        let letters = |x: &[f64]| {
            let mut v = slots_of(x, 0);
            v.sort_by_key(|&(_, s)| s);
            v.into_iter().map(|(l, s)| (GlyphSet::symbol_char(l), s)).collect::<Vec<_>>()
        };
        assert_eq!(letters(&design_matrix(&w, Scheme::Left).unwrap()), vec![('W', 1), ('O', 2), ('R', 3), ('D', 4)]);
        assert_eq!(letters(&design_matrix(&w, Scheme::Center).unwrap()), vec![('W', 3), ('O', 4), ('R', 5), ('D', 6)]);
        assert_eq!(letters(&design_matrix(&w, Scheme::Edge).unwrap()), vec![('W', 1), ('O', 2), ('R', 7), ('D', 8)]);
        let odd = design_matrix(&s(&["AIR"]), Scheme::Edge).unwrap();
        let mut v = slots_of(&odd, 0);
        v.sort_by_key(|&(_, s)| s);
        assert_eq!(v.iter().map(|&(_, s)| s).collect::<Vec<_>>(), vec![1, 2, 8]);
    }

    #[test]
    fn row_sums_and_length_eight_coincide() {
        let words = s(&["AIR", "PAIN", "SQUARE", "ALPHABET"]);
        for scheme in Scheme::ALL {
            let x = design_matrix(&words, scheme).unwrap();
            for (r, w) in words.iter().enumerate() {
                assert_eq!(x[r * N_FEATURES..(r + 1) * N_FEATURES].iter().sum::<f64>(), w.len() as f64);
            }
        }
        let eight = s(&["ALPHABET", "ELEPHANT"]);
        let l = design_matrix(&eight, Scheme::Left).unwrap();
        assert_eq!(l, design_matrix(&eight, Scheme::Center).unwrap());
        assert_eq!(l, design_matrix(&eight, Scheme::Edge).unwrap());
    }

    fn eye(n: usize) -> Vec<f64> {
        (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect()
    }

    fn no_intercept() -> LassoOptions {
        LassoOptions {
            fit_intercept: false,
            ..LassoOptions::default()
        }
    }

    #[test]
    fn identity_design_examples() {
        let fit = lasso(&eye(4), 4, &[1.0, 2.0, 3.0, 4.0], 0.0, &no_intercept()).unwrap();
        assert_eq!(fit.coef, vec![1.0, 2.0, 3.0, 4.0]);
        let fit = lasso(&eye(2), 2, &[3.0, 0.5], 1.0, &no_intercept()).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-12 && fit.coef[1] == 0.0);
    }

    #[test]
    fn huge_lambda_zeroes_coefficients() {
        let mut rng = substream(4, "lasso");
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lmax = lambda_max(&x, 6, &y).unwrap();
        let fit = lasso(&x, 6, &y, lmax * 1.0001, &LassoOptions::default()).unwrap();
        assert!(fit.coef.iter().all(|&b| b == 0.0));
        assert!((fit.intercept - y.iter().sum::<f64>() / 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_shape() {
        let g = lambda_grid(2.0);
        assert_eq!(g.len(), 16);
        assert!((g[0] - 2.0).abs() < 1e-15 && (g[15] - 2e-4).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn cv_errors_and_degenerate() {
        assert!(lasso_cv(&eye(3), 3, &[1.0, 2.0, 3.0], None, 5, &LassoOptions::default()).is_err());
        let x = vec![1.0; 12];
        let cv = lasso_cv(&x, 2, &[2.0; 6], None, 5, &LassoOptions::default()).unwrap();
        assert!(cv.degenerate);
        assert_eq!(cv.r_cv, 0.0);
    }

    #[test]
    fn cv_recovers_sparse_signal() {
        let mut rng = substream(9, "cv");
        let (n, p) = (200, 20);
        let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| 3.0 * x[i * p + 2] - 2.0 * x[i * p + 7] + 0.05 * rng.random_range(-1.0..1.0)).collect();
        let cv = lasso_cv(&x, p, &y, None, 5, &LassoOptions::default()).unwrap();
        assert!(cv.r_cv > 0.95);
        assert!((cv.fit.coef[2] - 3.0).abs() < 0.2 && (cv.fit.coef[7] + 2.0).abs() < 0.2);
    }

    #[test]
    fn fwhm_rules() {
        assert!((fwhm(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2) - 1.0).abs() < 1e-12);
        assert!((fwhm(&[0.0, 0.5, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0], 2) - 2.0).abs() < 1e-12);
        // edge peak mirrors its only measured side
        assert!((fwhm(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0) - 1.0).abs() < 1e-12);
        assert_eq!(fwhm(&[1.0; 8], 3), 8.0);
    }
}
