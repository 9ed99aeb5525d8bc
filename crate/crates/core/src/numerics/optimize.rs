//! Dense quasi-Newton (BFGS) minimizer with backtracking line search.
//!
//! The coefficient vectors in this crate are small (a few hundred entries at
//! most), so maintaining the full inverse-Hessian approximation is cheap and
//! avoids the bookkeeping of limited-memory variants. Deterministic given
//! its inputs.

use crate::linalg::dot;

pub const DEFAULT_MAX_ITERS: usize = 500;
const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeOutcome {
    /// Gradient sup-norm reached the tolerance.
    Converged,
    /// Iteration budget exhausted; best iterate returned.
    MaxIterations,
    /// Line search could not find a finite decrease; best iterate returned.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub outcome: MinimizeOutcome,
}

impl MinimizeResult {
    pub fn converged(&self) -> bool {
        self.outcome == MinimizeOutcome::Converged
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-8,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// Minimize a smooth objective with analytic gradient. The closure fills the
/// gradient slice and returns the objective value.
pub fn minimize<F>(f: F, init: &[f64], tol: f64) -> MinimizeResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    minimize_with(
        f,
        init,
        MinimizeOptions {
            tol,
            ..MinimizeOptions::default()
        },
    )
}

pub fn minimize_with<F>(mut f: F, init: &[f64], opts: MinimizeOptions) -> MinimizeResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = init.len();
    let mut x = init.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    if !value.is_finite() {
        return MinimizeResult {
            x,
            value,
            grad_norm: f64::INFINITY,
            iterations: 0,
            outcome: MinimizeOutcome::LineSearchFailed,
        };
    }

    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; n * n];
    let reset_h = |h: &mut [f64]| {
        h.fill(0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset_h(&mut h);

    let mut best_x = x.clone();
    let mut best_value = value;
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    let mut first_update = true;

    for iter in 0..opts.max_iters {
        let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm <= opts.tol {
            return MinimizeResult {
                x,
                value,
                grad_norm: gnorm,
                iterations: iter,
                outcome: MinimizeOutcome::Converged,
            };
        }

        // d = −H g
        for i in 0..n {
            dir[i] = -dot(&h[i * n..(i + 1) * n], &grad);
        }
        let mut slope = dot(&dir, &grad);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            reset_h(&mut h);
            first_update = true;
            for i in 0..n {
                dir[i] = -grad[i];
            }
            slope = dot(&dir, &grad);
            if !(slope < 0.0) {
                break; // gradient numerically zero
            }
        }

        // backtracking Armijo with quadratic interpolation; nonfinite trial
        // values shrink the step
        let mut step = 1.0_f64;
        let mut accepted = false;
        let mut value_new = f64::INFINITY;
        while step >= MIN_STEP {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            value_new = f(&x_new, &mut grad_new);
            if value_new.is_finite() && value_new <= value + ARMIJO_C1 * step * slope {
                accepted = true;
                break;
            }
            if value_new.is_finite() {
                // minimizer of the quadratic through f(x), slope, f(x+s d)
                let denom = 2.0 * (value_new - value - slope * step);
                let cand = if denom > 0.0 { -slope * step * step / denom } else { 0.5 * step };
                step = cand.clamp(0.1 * step, 0.5 * step);
            } else {
                step *= 0.5;
            }
        }
        if !accepted {
            let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            return MinimizeResult {
                x: best_x,
                value: best_value,
                grad_norm: gnorm,
                iterations: iter,
                outcome: MinimizeOutcome::LineSearchFailed,
            };
        }

        // BFGS update on the inverse Hessian
        let mut sy = 0.0;
        let mut yy = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            let y = grad_new[i] - grad[i];
            sy += s * y;
            yy += y * y;
        }
        if sy > 1e-12 * yy.sqrt().max(1e-12) {
            if first_update {
                // scale initial H to the secant curvature
                let scale = sy / yy.max(1e-300);
                if scale.is_finite() && scale > 0.0 {
                    for i in 0..n {
                        for j in 0..n {
                            h[i * n + j] = if i == j { scale } else { 0.0 };
                        }
                    }
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            // hy = H y
            let mut hy = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += h[i * n + j] * (grad_new[j] - grad[j]);
                }
                hy[i] = acc;
            }
            let yhy = (0..n).map(|i| (grad_new[i] - grad[i]) * hy[i]).sum::<f64>();
            for i in 0..n {
                let si = x_new[i] - x[i];
                for j in 0..n {
                    let sj = x_new[j] - x[j];
                    h[i * n + j] += -rho * (si * hy[j] + hy[i] * sj)
                        + rho * rho * yhy * si * sj
                        + rho * si * sj;
                }
            }
        }

        x.copy_from_slice(&x_new);
        grad.copy_from_slice(&grad_new);
        value = value_new;
        if value < best_value {
            best_value = value;
            best_x.copy_from_slice(&x);
        }
    }

    let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    MinimizeResult {
        x: best_x,
        value: best_value,
        grad_norm: gnorm,
        iterations: opts.max_iters,
        outcome: if gnorm <= opts.tol {
            MinimizeOutcome::Converged
        } else {
            MinimizeOutcome::MaxIterations
        },
    }
}

/// Golden-section scan for one-dimensional objectives; used for stationary
/// initializers and as an independent check against the quasi-Newton path.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = 0.618_033_988_749_894_9;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}
