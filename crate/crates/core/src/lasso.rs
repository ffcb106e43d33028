//! Nodewise LASSO: regress one predictor column on the others and keep the
//! residuals.
//!
//! The objective is `(1/n)||y - X b||^2 + lambda ||b||_1`. The solver is
//! cyclic coordinate descent in covariance form: it keeps the gradient
//! `g = (1/n) X'(y - X b)` up to date and touches a Gram column only when the
//! matching coefficient moves. Gram columns are built lazily, so a sweep over
//! inactive coordinates costs O(#predictors).

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{column, Dataset};
use crate::error::{Result, SdaError};
use crate::rng::{derive_seed, stream};

pub const MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_PATH_LENGTH: usize = 100;
pub const DEFAULT_FOLDS: usize = 10;

const CHANGE_TOL: f64 = 1e-7;
/// Path fits stop once no coordinate moves the loss by more than this
/// fraction of the target's variance in a sweep.
const PATH_TOL: f64 = 1e-7;
/// Internal KKT target; callers check against 1e-6.
const KKT_TOL: f64 = 1e-8;
/// In-sample `RSS / ||target||^2` below which the target is treated as an
/// exact linear combination of its conditioning set.
const COLLINEAR_RSS: f64 = 1e-4;

/// Above this many columns the full Gram matrix is not materialized.
const FULL_GRAM_MAX_COLS: usize = 2_000;

#[derive(Debug, Clone, Serialize)]
pub struct LassoFit {
    /// Column regressed on the others. For [`fit_lasso`] this is the index
    /// the target would have if appended after the predictor columns.
    pub target_index: usize,
    /// Conditioning columns, parallel to `coefficients`.
    pub predictors: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub active_set: Vec<usize>,
    pub objective_value: f64,
    /// Target reproduced (almost) exactly by its conditioning set; the fit
    /// was redone unpenalized and the residuals are ~0.
    pub collinear: bool,
    pub sweeps: usize,
    /// Objective after each sweep of the last solve.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    /// Equivalent constrained-form bound `M = ||b||_1`.
    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|b| b.abs()).sum()
    }

    /// Coefficient of an original column; zero when the column was not in
    /// the conditioning set.
    pub fn coefficient(&self, col: usize) -> f64 {
        self.predictors
            .iter()
            .position(|&c| c == col)
            .map_or(0.0, |k| self.coefficients[k])
    }

    /// Record written by `--dump-fits`.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "target_index": self.target_index,
            "lambda": self.lambda,
            "active_set": self.active_set,
            "coefficients": self.active_set.iter().map(|&c| self.coefficient(c)).collect::<Vec<_>>(),
            "l1_norm": self.l1_norm(),
            "collinear": self.collinear,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    /// Descending.
    pub lambda_path: Vec<f64>,
    /// `cv_errors[k][f]`: held-out mean squared error of fold `f` at
    /// `lambda_path[k]`.
    pub cv_errors: Vec<Vec<f64>>,
    pub mean_cv_errors: Vec<f64>,
    pub chosen_index: usize,
    pub chosen_lambda: f64,
    pub fold_count: usize,
}

/// Column matrix plus (optionally) its full Gram matrix `X'X`.
pub struct GramContext<'a> {
    x: &'a DMatrix<f64>,
    gram: Option<DMatrix<f64>>,
    sq_norms: Vec<f64>,
}

impl<'a> GramContext<'a> {
    pub fn new(x: &'a DMatrix<f64>) -> Self {
        let gram = (x.ncols() <= FULL_GRAM_MAX_COLS).then(|| x.tr_mul(x));
        let sq_norms = (0..x.ncols())
            .map(|j| column(x, j).iter().map(|v| v * v).sum())
            .collect();
        GramContext { x, gram, sq_norms }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    fn cross(&self, a: usize, b: usize) -> f64 {
        match &self.gram {
            Some(g) => g[(a, b)],
            None => dot(column(self.x, a), column(self.x, b)),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Target `t` regressed on `predictors`, using every row except `held_out`.
/// All Gram quantities are divided by the number of training rows.
struct Problem<'c, 'a> {
    ctx: &'c GramContext<'a>,
    predictors: &'c [usize],
    held_out: &'c [usize],
    n_train: f64,
    yy: f64,
    c: Vec<f64>,
    diag: Vec<f64>,
    degenerate: Vec<bool>,
    cols: Vec<Option<Vec<f64>>>,
}

impl<'c, 'a> Problem<'c, 'a> {
    fn new(ctx: &'c GramContext<'a>, target: usize, predictors: &'c [usize], held_out: &'c [usize]) -> Self {
        let n_train = (ctx.n() - held_out.len()) as f64;
        let n = ctx.n();
        let xs = ctx.x.as_slice();
        let held = |a: usize, b: usize| -> f64 {
            held_out
                .iter()
                .map(|&r| xs[a * n + r] * xs[b * n + r])
                .sum::<f64>()
        };
        let yy = (ctx.sq_norms[target] - held(target, target)) / n_train;
        let c: Vec<f64> = predictors
            .iter()
            .map(|&j| (ctx.cross(j, target) - held(j, target)) / n_train)
            .collect();
        let diag: Vec<f64> = predictors
            .iter()
            .map(|&j| (ctx.sq_norms[j] - held(j, j)) / n_train)
            .collect();
        let scale = diag.iter().cloned().fold(yy, f64::max).max(f64::MIN_POSITIVE);
        let degenerate = diag.iter().map(|&d| d <= 1e-12 * scale).collect();
        Problem {
            ctx,
            predictors,
            held_out,
            n_train,
            yy,
            c,
            diag,
            degenerate,
            cols: vec![None; predictors.len()],
        }
    }

    fn column(&mut self, j: usize) -> &[f64] {
        if self.cols[j].is_none() {
            let n = self.ctx.n();
            let xs = self.ctx.x.as_slice();
            let pj = self.predictors[j];
            let col = self
                .predictors
                .iter()
                .map(|&pk| {
                    let held: f64 = self.held_out.iter().map(|&r| xs[pk * n + r] * xs[pj * n + r]).sum();
                    (self.ctx.cross(pk, pj) - held) / self.n_train
                })
                .collect();
            self.cols[j] = Some(col);
        }
        self.cols[j].as_deref().unwrap()
    }

    /// Smallest lambda with an all-zero solution.
    fn lambda_max(&self) -> f64 {
        self.c
            .iter()
            .zip(&self.degenerate)
            .filter(|(_, &d)| !d)
            .map(|(c, _)| 2.0 * c.abs())
            .fold(0.0, f64::max)
    }

    fn objective(&self, beta: &[f64], grad: &[f64], lambda: f64) -> f64 {
        // b'Gb = b'(c - g)
        let cb = dot(&self.c, beta);
        let gb = dot(grad, beta);
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        self.yy - cb - gb + lambda * l1
    }

    fn refresh_gradient(&mut self, beta: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.c);
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                let col = self.column(j);
                grad.iter_mut().zip(col).for_each(|(g, &gj)| *g -= gj * b);
            }
        }
    }

    fn kkt_violation(&self, beta: &[f64], grad: &[f64], lambda: f64) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..beta.len() {
            if self.degenerate[j] {
                continue;
            }
            let g2 = 2.0 * grad[j];
            let v = if beta[j] != 0.0 {
                (g2 - lambda * beta[j].signum()).abs()
            } else {
                (g2.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Coordinate descent at one lambda, warm-started from `state`.
    fn solve(&mut self, state: &mut CdState, lambda: f64, accuracy: Accuracy, trace: &mut Vec<f64>) -> Result<usize> {
        trace.clear();
        let m = self.predictors.len();
        let half = 0.5 * lambda;
        let mut tol = CHANGE_TOL;
        let mut sweeps = 0;
        let mut last = self.objective(&state.beta, &state.grad, lambda);
        // at or above the null threshold the answer is exactly zero; the
        // slack absorbs rounding between equivalent ways of computing it
        if state.beta.iter().all(|&b| b == 0.0)
            && (0..m).all(|j| self.degenerate[j] || state.grad[j].abs() <= half * (1.0 + 1e-12))
        {
            trace.push(last);
            return Ok(1);
        }
        loop {
            if sweeps >= MAX_SWEEPS {
                return Err(SdaError::NoConvergence(MAX_SWEEPS));
            }
            sweeps += 1;
            let mut max_delta = 0.0f64;
            let mut max_gain = 0.0f64;
            for j in 0..m {
                if self.degenerate[j] {
                    continue;
                }
                let old = state.beta[j];
                let rho = state.grad[j] + self.diag[j] * old;
                let new = soft_threshold(rho, half) / self.diag[j];
                let delta = new - old;
                if delta != 0.0 {
                    state.beta[j] = new;
                    let col = self.column(j);
                    state.grad.iter_mut().zip(col).for_each(|(g, &gj)| *g -= gj * delta);
                    max_delta = max_delta.max(delta.abs());
                    max_gain = max_gain.max(self.diag[j] * delta * delta);
                }
            }
            let obj = self.objective(&state.beta, &state.grad, lambda);
            debug_assert!(
                obj <= last + 1e-12 * (1.0 + last.abs()),
                "objective increased: {last} -> {obj}"
            );
            trace.push(obj);
            last = obj;

            if accuracy == Accuracy::Path {
                if max_gain <= PATH_TOL * self.yy {
                    return Ok(sweeps);
                }
                continue;
            }
            let bmax = state.beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if max_delta < tol * (1.0 + bmax) {
                let beta = state.beta.clone();
                self.refresh_gradient(&beta, &mut state.grad);
                if self.kkt_violation(&state.beta, &state.grad, lambda) <= KKT_TOL || tol < 1e-15 {
                    return Ok(sweeps);
                }
                tol *= 0.1;
            }
        }
    }

    /// Held-out mean squared prediction error.
    fn held_out_error(&self, target: usize, beta: &[f64]) -> f64 {
        let n = self.ctx.n();
        let xs = self.ctx.x.as_slice();
        let active: Vec<(usize, f64)> = beta
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(k, &b)| (self.predictors[k], b))
            .collect();
        let sse: f64 = self
            .held_out
            .iter()
            .map(|&r| {
                let pred: f64 = active.iter().map(|&(c, b)| xs[c * n + r] * b).sum();
                let e = xs[target * n + r] - pred;
                e * e
            })
            .sum();
        sse / self.held_out.len() as f64
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Accuracy {
    /// Loose stopping rule for cross-validation and warm-start steps.
    Path,
    /// Tight stopping rule plus a KKT check, for returned fits.
    Exact,
}

struct CdState {
    beta: Vec<f64>,
    grad: Vec<f64>,
}

impl CdState {
    fn zero(problem: &Problem) -> Self {
        CdState {
            beta: vec![0.0; problem.predictors.len()],
            grad: problem.c.clone(),
        }
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Geometric path from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_path(lambda_max: f64, ratio: f64, len: usize) -> Vec<f64> {
    if lambda_max <= 0.0 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|k| lambda_max * ratio.powf(k as f64 / (len - 1) as f64))
        .collect()
}

/// Ratio between the smallest and largest lambda on the default path.
pub fn path_ratio(n: usize, p: usize) -> f64 {
    if n < p {
        1e-2
    } else {
        1e-3
    }
}

fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(SdaError::mismatch(format!(
            "design has {} rows, target has {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SdaError::NonFinite("lasso input"));
    }
    Ok(())
}

fn append_target(x_others: &DMatrix<f64>, x_target: &[f64]) -> DMatrix<f64> {
    let (n, m) = x_others.shape();
    let mut data = Vec::with_capacity(n * (m + 1));
    data.extend_from_slice(x_others.as_slice());
    data.extend_from_slice(x_target);
    DMatrix::from_vec(n, m + 1, data)
}

fn residuals(x: &DMatrix<f64>, target: usize, predictors: &[usize], beta: &[f64]) -> Vec<f64> {
    let mut r = column(x, target).to_vec();
    for (&c, &b) in predictors.iter().zip(beta) {
        if b != 0.0 {
            r.iter_mut().zip(column(x, c)).for_each(|(ri, &xi)| *ri -= b * xi);
        }
    }
    r
}

fn finish_fit(
    x: &DMatrix<f64>,
    target: usize,
    predictors: &[usize],
    beta: Vec<f64>,
    lambda: f64,
    sweeps: usize,
    trace: Vec<f64>,
) -> LassoFit {
    let residuals = residuals(x, target, predictors, &beta);
    let n = x.nrows() as f64;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let active_set = predictors
        .iter()
        .zip(&beta)
        .filter(|(_, &b)| b != 0.0)
        .map(|(&c, _)| c)
        .collect();
    LassoFit {
        target_index: target,
        predictors: predictors.to_vec(),
        coefficients: beta,
        lambda,
        residuals,
        active_set,
        objective_value: rss / n + lambda * l1,
        collinear: false,
        sweeps,
        objective_trace: trace,
    }
}

/// Minimizes `(1/n)||x_target - X b||^2 + lambda ||b||_1` from a zero start.
pub fn fit_lasso(x_others: &DMatrix<f64>, x_target: &[f64], lambda: f64) -> Result<LassoFit> {
    check_finite(x_others, x_target)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(SdaError::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if x_others.nrows() < 2 {
        return Err(SdaError::invalid("need at least 2 observations"));
    }
    let x = append_target(x_others, x_target);
    let target = x_others.ncols();
    let predictors: Vec<usize> = (0..target).collect();
    let ctx = GramContext::new(&x);
    let mut problem = Problem::new(&ctx, target, &predictors, &[]);
    let mut state = CdState::zero(&problem);
    let mut trace = Vec::new();
    let sweeps = problem.solve(&mut state, lambda, Accuracy::Exact, &mut trace)?;
    Ok(finish_fit(&x, target, &predictors, state.beta, lambda, sweeps, trace))
}

/// Seeded partition of `0..n` into `folds` blocks whose sizes differ by at
/// most one. Each block is sorted.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|k| {
            let mut block = idx[k * n / folds..(k + 1) * n / folds].to_vec();
            block.sort_unstable();
            block
        })
        .collect()
}

fn cross_validate(
    ctx: &GramContext,
    target: usize,
    predictors: &[usize],
    folds: usize,
    path_length: usize,
    seed: u64,
) -> Result<CvReport> {
    let n = ctx.n();
    if folds < 2 || folds > n {
        return Err(SdaError::invalid(format!("need 2 <= folds <= n, got folds={folds}, n={n}")));
    }
    if path_length < 2 {
        return Err(SdaError::invalid("lambda path needs at least 2 points"));
    }
    let lambda_max = Problem::new(ctx, target, predictors, &[]).lambda_max();
    let path = lambda_path(lambda_max, path_ratio(n, predictors.len() + 1), path_length);

    let mut cv_errors = vec![vec![0.0; folds]; path_length];
    let mut trace = Vec::new();
    for (f, held_out) in fold_partition(n, folds, seed).iter().enumerate() {
        let mut problem = Problem::new(ctx, target, predictors, held_out);
        let mut state = CdState::zero(&problem);
        for (k, &lambda) in path.iter().enumerate() {
            problem.solve(&mut state, lambda, Accuracy::Path, &mut trace)?;
            cv_errors[k][f] = problem.held_out_error(target, &state.beta);
        }
    }
    let mean_cv_errors: Vec<f64> = cv_errors
        .iter()
        .map(|row| row.iter().sum::<f64>() / folds as f64)
        .collect();
    if mean_cv_errors.iter().any(|e| !e.is_finite()) {
        return Err(SdaError::NonFinite("cross-validation error"));
    }
    // ties go to the smallest lambda
    let mut chosen = 0;
    for (k, &e) in mean_cv_errors.iter().enumerate() {
        if e <= mean_cv_errors[chosen] {
            chosen = k;
        }
    }
    Ok(CvReport {
        chosen_lambda: path[chosen],
        lambda_path: path,
        cv_errors,
        mean_cv_errors,
        chosen_index: chosen,
        fold_count: folds,
    })
}

/// K-fold cross-validation over the default geometric lambda path.
pub fn cv_select_lambda(
    x_others: &DMatrix<f64>,
    x_target: &[f64],
    folds: usize,
    path_length: usize,
    seed: u64,
) -> Result<CvReport> {
    check_finite(x_others, x_target)?;
    let x = append_target(x_others, x_target);
    let target = x_others.ncols();
    let predictors: Vec<usize> = (0..target).collect();
    let ctx = GramContext::new(&x);
    cross_validate(&ctx, target, &predictors, folds, path_length, seed)
}

/// Nodewise regressions that share one data matrix and its Gram matrix.
pub struct NodewiseEngine<'a> {
    ctx: GramContext<'a>,
    folds: usize,
    path_length: usize,
}

impl<'a> NodewiseEngine<'a> {
    pub fn new(d: &'a Dataset, folds: usize) -> Self {
        NodewiseEngine {
            ctx: GramContext::new(d.x()),
            folds,
            path_length: DEFAULT_PATH_LENGTH,
        }
    }

    pub fn with_path_length(mut self, len: usize) -> Self {
        self.path_length = len;
        self
    }

    /// Cross-validated LASSO of column `i` on the other columns (or on
    /// `screen`). The fold partition is seeded from `(seed, i)`.
    pub fn fit(&self, i: usize, screen: Option<&[usize]>, seed: u64) -> Result<LassoFit> {
        let p = self.ctx.x.ncols();
        if i >= p {
            return Err(SdaError::invalid(format!("target index {i} out of range (p = {p})")));
        }
        let predictors: Vec<usize> = match screen {
            Some(set) => {
                if set.contains(&i) {
                    return Err(SdaError::invalid("screened set must not contain the target"));
                }
                if let Some(&bad) = set.iter().find(|&&j| j >= p) {
                    return Err(SdaError::invalid(format!("screened index {bad} out of range")));
                }
                let mut s = set.to_vec();
                s.sort_unstable();
                s.dedup();
                s
            }
            None => (0..p).filter(|&j| j != i).collect(),
        };
        if predictors.is_empty() {
            let r = column(self.ctx.x, i).to_vec();
            let n = r.len() as f64;
            return Ok(LassoFit {
                target_index: i,
                predictors,
                coefficients: vec![],
                lambda: 0.0,
                objective_value: r.iter().map(|v| v * v).sum::<f64>() / n,
                residuals: r,
                active_set: vec![],
                collinear: false,
                sweeps: 0,
                objective_trace: vec![],
            });
        }

        let fold_seed = derive_seed(seed, stream::FOLDS, i as u64);
        let cv = cross_validate(&self.ctx, i, &predictors, self.folds, self.path_length, fold_seed)?;

        let mut problem = Problem::new(&self.ctx, i, &predictors, &[]);
        let mut state = CdState::zero(&problem);
        let mut trace = Vec::new();
        for &lambda in &cv.lambda_path[..cv.chosen_index] {
            problem.solve(&mut state, lambda, Accuracy::Path, &mut trace)?;
        }
        let sweeps = problem.solve(&mut state, cv.chosen_lambda, Accuracy::Exact, &mut trace)?;
        let mut fit = finish_fit(self.ctx.x, i, &predictors, state.beta.clone(), cv.chosen_lambda, sweeps, trace);

        let tss = self.ctx.sq_norms[i];
        let rss: f64 = fit.residuals.iter().map(|r| r * r).sum();
        if tss > 0.0 && rss < COLLINEAR_RSS * tss {
            let mut trace = Vec::new();
            let sweeps = problem.solve(&mut state, 0.0, Accuracy::Exact, &mut trace)?;
            fit = finish_fit(self.ctx.x, i, &predictors, state.beta, 0.0, sweeps, trace);
            fit.collinear = true;
        }
        Ok(fit)
    }
}

/// One-off nodewise fit. For many targets on the same data use
/// [`NodewiseEngine`], which reuses the Gram matrix.
pub fn nodewise_fit(d: &Dataset, i: usize, screen: Option<&[usize]>, folds: usize, seed: u64) -> Result<LassoFit> {
    NodewiseEngine::new(d, folds).fit(i, screen, seed)
}

/// Largest violation of the LASSO optimality conditions, computed directly
/// from the data: `|(2/n) x_j'r - lambda sign(b_j)|` on the support and
/// `max(0, |(2/n) x_j'r| - lambda)` off it. Zero-variance columns are
/// skipped.
pub fn kkt_residual(x_others: &DMatrix<f64>, x_target: &[f64], coefficients: &[f64], lambda: f64) -> f64 {
    let n = x_others.nrows() as f64;
    let mut r = x_target.to_vec();
    for (j, &b) in coefficients.iter().enumerate() {
        if b != 0.0 {
            r.iter_mut().zip(column(x_others, j)).for_each(|(ri, &x)| *ri -= b * x);
        }
    }
    let mut worst = 0.0f64;
    for (j, &b) in coefficients.iter().enumerate() {
        let col = column(x_others, j);
        if col.iter().all(|&v| v == 0.0) {
            continue;
        }
        let g = 2.0 / n * dot(col, &r);
        let v = if b != 0.0 {
            (g - lambda * b.signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
