//! Shared machinery for the two penalized tensor-spline fits: design
//! construction, the penalized objective, and blocked cross-validation over
//! the smoothing-weight grid.
//!
//! The linear predictor is eta = intercept + Bc * beta where Bc is the
//! column-centered tensor design. Both curvature penalties annihilate the
//! all-equal-coefficients direction, and so does the centered design, so the
//! fitting objective adds a soft sum-to-zero anchor (sum beta)^2 that pins
//! that single flat direction without touching predictions or penalties.

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Mat};
use crate::numerics::optimize::{MinimizeOptions, MinimizeOutcome, MinimizeResult};
use crate::splines::{
    knots_angle, knots_time, tensor_row_into, CubicSplineBasis, CyclicSplineBasis, KnotGrid,
};
use rayon::prelude::*;

const ANCHOR_WEIGHT: f64 = 1.0;

/// A fitted tensor-spline surface on the log link: intercept plus centered
/// tensor coefficients with the knot grids needed to rebuild basis rows.
#[derive(Debug, Clone)]
pub struct TensorSplineModel {
    pub intercept: f64,
    pub coefs: Vec<f64>,
    pub knots_t: KnotGrid,
    pub knots_phi: KnotGrid,
    pub col_means: Vec<f64>,
    pub lambda_t: f64,
    pub lambda_phi: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl TensorSplineModel {
    pub fn evaluator(&self) -> Result<TensorEvaluator> {
        TensorEvaluator::new(self)
    }

    /// Linear predictor at one (phi, t); rebuilds basis structures, so use
    /// `evaluator()` for bulk prediction.
    pub fn predict(&self, phi: f64, t: f64) -> Result<f64> {
        self.evaluator()?.predict(phi, t)
    }
}

/// Precomputed basis factorizations for repeated prediction from a model.
pub struct TensorEvaluator {
    time_basis: CubicSplineBasis,
    angle_basis: CyclicSplineBasis,
    intercept: f64,
    coefs: Vec<f64>,
    col_means: Vec<f64>,
    t_min: f64,
    t_max: f64,
    scratch: usize,
}

impl TensorEvaluator {
    fn new(model: &TensorSplineModel) -> Result<Self> {
        let time_basis = CubicSplineBasis::new(&model.knots_t)?;
        let angle_basis = CyclicSplineBasis::new(&model.knots_phi)?;
        let p = time_basis.n_basis() * angle_basis.n_basis();
        if model.coefs.len() != p || model.col_means.len() != p {
            return Err(Error::model(format!(
                "tensor model dimension mismatch: coefs {}, expected {p}",
                model.coefs.len()
            )));
        }
        Ok(TensorEvaluator {
            time_basis,
            angle_basis,
            intercept: model.intercept,
            coefs: model.coefs.clone(),
            col_means: model.col_means.clone(),
            t_min: model.t_min,
            t_max: model.t_max,
            scratch: p,
        })
    }

    pub fn predict(&self, phi: f64, t: f64) -> Result<f64> {
        if !t.is_finite() || t < self.t_min - 1e-9 || t > self.t_max + 1e-9 {
            return Err(Error::domain(format!(
                "time {t} outside the fitted range [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        let trow = self.time_basis.row(t)?;
        let prow = self.angle_basis.row(phi)?;
        let mut row = vec![0.0; self.scratch];
        tensor_row_into(&trow, &prow, &mut row);
        let mut eta = self.intercept;
        for ((r, m), c) in row.iter().zip(&self.col_means).zip(&self.coefs) {
            eta += (r - m) * c;
        }
        Ok(eta)
    }
}

/// Centered tensor design over a set of observations plus both penalties.
pub struct TensorDesign {
    pub design: Mat,
    pub col_means: Vec<f64>,
    pub penalty_t: Mat,
    pub penalty_phi: Mat,
    pub knots_t: KnotGrid,
    pub knots_phi: KnotGrid,
    pub t_min: f64,
    pub t_max: f64,
}

impl TensorDesign {
    pub fn n_coef(&self) -> usize {
        self.design.cols()
    }

    pub fn n_rows(&self) -> usize {
        self.design.rows()
    }
}

/// Build the centered design for observations at (t_i, phi_i). `t_len` is
/// the horizon T; knots span {1,...,T} and angles [0, 2pi].
pub fn build_design(
    ts: &[f64],
    phis: &[f64],
    t_len: usize,
    kappa_t: usize,
    kappa_phi: usize,
) -> Result<TensorDesign> {
    if ts.len() != phis.len() {
        return Err(Error::data("time/angle length mismatch in design"));
    }
    if ts.is_empty() {
        return Err(Error::data("empty design"));
    }
    let knots_t = knots_time(t_len, kappa_t)?;
    let knots_phi = knots_angle(kappa_phi)?;
    let tb = CubicSplineBasis::new(&knots_t)?;
    let ab = CyclicSplineBasis::new(&knots_phi)?;
    let a = tb.n_basis();
    let b = ab.n_basis();
    let p = a * b;
    let n = ts.len();
    let mut design = Mat::zeros(n, p);
    for i in 0..n {
        let trow = tb.row(ts[i])?;
        let prow = ab.row(phis[i])?;
        tensor_row_into(&trow, &prow, design.row_mut(i));
    }
    // column centering for identifiability against the explicit intercept
    let mut col_means = vec![0.0; p];
    for i in 0..n {
        for (m, v) in col_means.iter_mut().zip(design.row(i)) {
            *m += v;
        }
    }
    for m in col_means.iter_mut() {
        *m /= n as f64;
    }
    for i in 0..n {
        for (v, m) in design.row_mut(i).iter_mut().zip(&col_means) {
            *v -= m;
        }
    }
    let penalty_t = tb.penalty().kron(&Mat::identity(b));
    let penalty_phi = Mat::identity(a).kron(ab.penalty());
    Ok(TensorDesign {
        design,
        col_means,
        penalty_t,
        penalty_phi,
        knots_t,
        knots_phi,
        t_min: 1.0,
        t_max: t_len as f64,
    })
}

/// Per-row loss with analytic first and second derivatives in the linear
/// predictor. `rows` maps positions in `eta` back to observation indices.
pub trait RowLoss: Sync {
    fn loss_and_grad(&self, rows: &[usize], eta: &[f64], grad_eta: &mut [f64]) -> f64;
    /// Nonnegative curvature d2 loss / d eta2 per row, for the Newton
    /// preconditioner; clamp at zero where the true value can go negative.
    fn curvature(&self, rows: &[usize], eta: &[f64], curv: &mut [f64]);
}

/// Parameters of one penalized fit: intercept first, then tensor
/// coefficients.
#[derive(Debug, Clone)]
pub struct Theta {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

pub struct PenalizedFitResult {
    pub theta: Theta,
    pub minimize: MinimizeResult,
}

/// Loss Hessian in (intercept, coefficients): sum_i w_i [1, b_i][1, b_i]'
/// with w_i the per-row curvature at `theta`. Used as the Newton
/// preconditioner; the expensive piece, reusable across smoothing cells.
pub fn loss_hessian(
    design: &TensorDesign,
    rows: &[usize],
    loss: &dyn RowLoss,
    theta: &Theta,
) -> Mat {
    let p = design.n_coef();
    let mut eta = vec![0.0; rows.len()];
    for (k, &i) in rows.iter().enumerate() {
        eta[k] = theta.intercept + dot(design.design.row(i), &theta.coefs);
    }
    let mut curv = vec![0.0; rows.len()];
    loss.curvature(rows, &eta, &mut curv);
    let mut h = Mat::zeros(p + 1, p + 1);
    for (k, &i) in rows.iter().enumerate() {
        let w = curv[k].max(0.0);
        if w == 0.0 {
            continue;
        }
        let b = design.design.row(i);
        h[(0, 0)] += w;
        for j in 0..p {
            let wbj = w * b[j];
            h[(0, j + 1)] += wbj;
            let hrow = h.row_mut(j + 1);
            for (hv, bv) in hrow[j + 1..].iter_mut().zip(&b[j..]) {
                *hv += wbj * bv;
            }
        }
    }
    // mirror the upper triangle
    for i in 0..=p {
        for j in i + 1..=p {
            h[(j, i)] = h[(i, j)];
        }
    }
    h
}

/// Minimize loss(eta) + lambda_t b'P_t b + lambda_phi b'P_phi b over the
/// rows in `rows` by damped Newton steps. The Newton matrix is the loss
/// Hessian (optionally a cached one from a reference point) plus the
/// penalty and anchor blocks; it is refreshed at the current iterate when
/// progress stalls.
pub fn fit_penalized(
    design: &TensorDesign,
    rows: &[usize],
    loss: &dyn RowLoss,
    lambda_t: f64,
    lambda_phi: f64,
    init: &Theta,
    opts: MinimizeOptions,
    gram_cache: Option<&Mat>,
) -> Result<PenalizedFitResult> {
    let p = design.n_coef();
    if init.coefs.len() != p {
        return Err(Error::model("init coefficient dimension mismatch"));
    }
    let mut x = Vec::with_capacity(p + 1);
    x.push(init.intercept);
    x.extend_from_slice(&init.coefs);

    let mut eta = vec![0.0; rows.len()];
    let mut grad_eta = vec![0.0; rows.len()];
    let mut value_grad = |x: &[f64], grad: &mut [f64]| -> f64 {
        let (b0, beta) = (x[0], &x[1..]);
        for (k, &i) in rows.iter().enumerate() {
            eta[k] = b0 + dot(design.design.row(i), beta);
        }
        let mut value = loss.loss_and_grad(rows, &eta, &mut grad_eta);
        grad.fill(0.0);
        for (k, &i) in rows.iter().enumerate() {
            let w = grad_eta[k];
            grad[0] += w;
            if w == 0.0 {
                continue;
            }
            for (g, d) in grad[1..].iter_mut().zip(design.design.row(i)) {
                *g += w * d;
            }
        }
        let pt = design.penalty_t.mul_vec(beta);
        let pp = design.penalty_phi.mul_vec(beta);
        value += lambda_t * dot(&pt, beta) + lambda_phi * dot(&pp, beta);
        for j in 0..p {
            grad[1 + j] += 2.0 * (lambda_t * pt[j] + lambda_phi * pp[j]);
        }
        let s: f64 = beta.iter().sum();
        value += ANCHOR_WEIGHT * s * s;
        for j in 0..p {
            grad[1 + j] += 2.0 * ANCHOR_WEIGHT * s;
        }
        value
    };

    // assemble and factor the Newton matrix from a loss Hessian
    let assemble = |gram: &Mat| -> Result<Cholesky> {
        let mut h = gram.clone();
        for i in 0..p {
            for j in 0..p {
                h[(i + 1, j + 1)] += 2.0
                    * (lambda_t * design.penalty_t[(i, j)]
                        + lambda_phi * design.penalty_phi[(i, j)]
                        + ANCHOR_WEIGHT);
            }
        }
        let mut ridge = 0.0;
        let mean_diag = (0..=p).map(|i| h[(i, i)]).sum::<f64>() / (p + 1) as f64;
        for _ in 0..12 {
            let mut trial = h.clone();
            if ridge > 0.0 {
                for i in 0..=p {
                    trial[(i, i)] += ridge;
                }
            }
            if let Some(c) = Cholesky::new(&trial) {
                return Ok(c);
            }
            ridge = if ridge == 0.0 {
                1e-10 * mean_diag.max(1e-300)
            } else {
                ridge * 100.0
            };
        }
        Err(Error::optim("newton matrix could not be factored"))
    };

    let theta_of = |x: &[f64]| Theta {
        intercept: x[0],
        coefs: x[1..].to_vec(),
    };

    let mut chol = match gram_cache {
        Some(g) => assemble(g)?,
        None => assemble(&loss_hessian(design, rows, loss, init))?,
    };
    let mut fresh = gram_cache.is_none();
    let mut refresh_budget: usize = if gram_cache.is_some() { 2 } else { 50 };

    let mut grad = vec![0.0; p + 1];
    let mut value = value_grad(&x, &mut grad);
    if !value.is_finite() {
        return Err(Error::optim(
            "penalized fit failed: objective not finite at the initial point",
        ));
    }
    let mut best_x = x.clone();
    let mut best_value = value;
    let mut x_new = vec![0.0; p + 1];
    let mut grad_new = vec![0.0; p + 1];
    let mut outcome = MinimizeOutcome::MaxIterations;
    let mut iters = 0;
    let mut stale = 0usize;

    while iters < opts.max_iters {
        let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm <= opts.tol {
            outcome = MinimizeOutcome::Converged;
            break;
        }
        let mut dir: Vec<f64> = chol.solve(&grad).iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &grad);
        if !(slope < 0.0) {
            if !fresh && refresh_budget > 0 {
                refresh_budget -= 1;
                chol = assemble(&loss_hessian(design, rows, loss, &theta_of(&x)))?;
                fresh = true;
                dir = chol.solve(&grad).iter().map(|v| -v).collect();
                slope = dot(&dir, &grad);
            }
            if !(slope < 0.0) {
                // numerically flat
                outcome = MinimizeOutcome::Converged;
                break;
            }
        }

        // Armijo backtracking with quadratic interpolation
        let mut step = 1.0_f64;
        let mut accepted = false;
        let mut value_new = f64::INFINITY;
        while step >= 1e-20 {
            for i in 0..=p {
                x_new[i] = x[i] + step * dir[i];
            }
            value_new = value_grad(&x_new, &mut grad_new);
            if value_new.is_finite() && value_new <= value + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            if value_new.is_finite() {
                let denom = 2.0 * (value_new - value - slope * step);
                let cand = if denom > 0.0 {
                    -slope * step * step / denom
                } else {
                    0.5 * step
                };
                step = cand.clamp(0.1 * step, 0.5 * step);
            } else {
                step *= 0.5;
            }
        }
        if !accepted {
            if !fresh && refresh_budget > 0 {
                refresh_budget -= 1;
                chol = assemble(&loss_hessian(design, rows, loss, &theta_of(&x)))?;
                fresh = true;
                continue;
            }
            outcome = MinimizeOutcome::LineSearchFailed;
            break;
        }
        x.copy_from_slice(&x_new);
        grad.copy_from_slice(&grad_new);
        value = value_new;
        if value < best_value {
            best_value = value;
            best_x.copy_from_slice(&x);
        }
        iters += 1;
        // refresh the Newton matrix when steps shorten or age
        stale += if step < 0.3 { 4 } else { 1 };
        if stale >= 20 && iters < opts.max_iters && refresh_budget > 0 {
            refresh_budget -= 1;
            chol = assemble(&loss_hessian(design, rows, loss, &theta_of(&x)))?;
            fresh = true;
            stale = 0;
        } else if step < 1e-3 {
            fresh = false;
        }
    }

    let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let res = MinimizeResult {
        x: if outcome == MinimizeOutcome::LineSearchFailed {
            best_x
        } else {
            x
        },
        value: if outcome == MinimizeOutcome::LineSearchFailed {
            best_value
        } else {
            value
        },
        grad_norm: gnorm,
        iterations: iters,
        outcome,
    };
    let theta = theta_of(&res.x);
    Ok(PenalizedFitResult {
        theta,
        minimize: res,
    })
}

/// Contiguous blocked folds over n observations (data assumed time-ordered).
pub fn blocked_folds(n: usize, k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let lo = f * n / k;
        let hi = (f + 1) * n / k;
        let val: Vec<usize> = (lo..hi).collect();
        let train: Vec<usize> = (0..lo).chain(hi..n).collect();
        folds.push((train, val));
    }
    folds
}

/// Default smoothing grid: 5 log-spaced values spanning [1e-4, 1e4].
pub fn default_lambda_grid() -> Vec<f64> {
    vec![1e-4, 1e-2, 1.0, 1e2, 1e4]
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub lambda_t: f64,
    pub lambda_phi: f64,
    /// Summed held-out score per (lambda_t index, lambda_phi index).
    pub scores: Vec<Vec<f64>>,
    /// Grid points skipped because a fold's optimizer failed.
    pub skipped: Vec<(usize, usize)>,
    /// Full-data pilot fit at the grid midpoint; a warm start for the
    /// final fit.
    pub pilot: Theta,
}

/// Select (lambda_t, lambda_phi) by k-fold blocked cross-validation of a
/// held-out score. Folds run in parallel; within a fold the grid is walked
/// in a fixed order with warm starts, so results do not depend on
/// scheduling. Ties break toward the smallest grid indices.
pub fn select_lambda_cv<S>(
    design: &TensorDesign,
    loss: &dyn RowLoss,
    score: &S,
    grid: &[f64],
    k_folds: usize,
    init: &Theta,
    opts: MinimizeOptions,
) -> Result<CvReport>
where
    S: Fn(&Theta, &[usize]) -> f64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::config("empty smoothing grid"));
    }
    let n = design.n_rows();
    if n < 2 * k_folds {
        return Err(Error::data(format!(
            "too few observations ({n}) for {k_folds}-fold cross-validation"
        )));
    }
    let folds = blocked_folds(n, k_folds);
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..grid.len()).map(move |j| (i, j)))
        .collect();

    // pilot fit on all rows at the middle of the grid: a shared warm start
    // that cuts the per-fold iteration counts substantially
    let all_rows: Vec<usize> = (0..n).collect();
    let mid = grid[grid.len() / 2];
    let pilot = fit_penalized(
        design,
        &all_rows,
        loss,
        mid,
        mid,
        init,
        MinimizeOptions {
            tol: opts.tol.max(1e-6),
            max_iters: opts.max_iters,
        },
        None,
    )
    .map(|f| f.theta)
    .unwrap_or_else(|_| init.clone());

    // per fold: score for every cell, or None when the fit failed
    let per_fold: Vec<Vec<Option<f64>>> = folds
        .par_iter()
        .map(|(train, val)| {
            let mut out = vec![None; cells.len()];
            let mut warm = pilot.clone();
            let gram = loss_hessian(design, train, loss, &pilot);
            for (c, &(i, j)) in cells.iter().enumerate() {
                let fit =
                    fit_penalized(design, train, loss, grid[i], grid[j], &warm, opts, Some(&gram));
                match fit {
                    Ok(f) if f.minimize.outcome != MinimizeOutcome::LineSearchFailed => {
                        out[c] = Some(score(&f.theta, val));
                        warm = f.theta;
                    }
                    Ok(f) => {
                        // keep the best iterate as a warm start but mark the
                        // cell as unusable
                        warm = f.theta;
                    }
                    Err(_) => {}
                }
            }
            out
        })
        .collect();

    let mut scores = vec![vec![f64::INFINITY; grid.len()]; grid.len()];
    let mut skipped = Vec::new();
    let mut best: Option<((usize, usize), f64)> = None;
    for (c, &(i, j)) in cells.iter().enumerate() {
        let mut total = 0.0;
        let mut ok = true;
        for fold_scores in &per_fold {
            match fold_scores[c] {
                Some(s) if s.is_finite() => total += s,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            scores[i][j] = total;
            if best.map_or(true, |(_, b)| total < b) {
                best = Some(((i, j), total));
            }
        } else {
            skipped.push((i, j));
        }
    }
    let ((bi, bj), _) = best.ok_or_else(|| {
        Error::optim("cross-validation failed at every grid point")
    })?;
    Ok(CvReport {
        lambda_t: grid[bi],
        lambda_phi: grid[bj],
        scores,
        skipped,
        pilot,
    })
}
