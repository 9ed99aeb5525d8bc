//! Marginal pipeline for returns data: GARCH(1,1) volatility filtering by
//! Gaussian quasi-maximum likelihood, a semi-parametric two-tailed
//! generalized Pareto margin for the filtered residuals, and the invertible
//! map to and from the standard Laplace scale.

use crate::error::{Error, Result};
use crate::numerics::optimize::{minimize_with, MinimizeOptions};
use crate::numerics::{laplace_cdf, laplace_quantile, laplace_quantile_from_survival, laplace_survival, RngStream};

/// Fitted GARCH(1,1): Q_t = mu + sigma_t eps_t with
/// sigma^2_t = c + a Q^2_{t-1} + b sigma^2_{t-1} and sigma^2_1 set to the
/// sample variance.
#[derive(Debug, Clone)]
pub struct GarchFit {
    pub mu: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub sigma2_path: Vec<f64>,
}

/// Log-returns log(P_t / P_{t-1}); prices must be positive.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::data("need at least two prices for returns"));
    }
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::data(format!("nonpositive or nonfinite price {p}")));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const PERSISTENCE_CAP: f64 = 0.999;

/// Gaussian QMLE of the GARCH(1,1) parameters. Positivity and the
/// stationarity bound a + b < 0.999 are enforced through the optimizer's
/// parametrization, so any returned fit is valid.
pub fn fit_garch11(q: &[f64]) -> Result<GarchFit> {
    let n = q.len();
    if n < 100 {
        return Err(Error::data(format!(
            "need at least 100 observations to fit the volatility model, got {n}"
        )));
    }
    let mean = q.iter().sum::<f64>() / n as f64;
    let var = q.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let spread = q.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x))
        - q.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if !(var > 0.0) || spread == 0.0 {
        return Err(Error::data(
            "zero variance in returns: volatility model undefined",
        ));
    }

    // theta = [mu, ln c, logit-ish persistence, logit arch share]
    let psi0 = 0.9_f64;
    let w0 = 0.1_f64;
    let init = [
        mean,
        (var * (1.0 - psi0)).ln(),
        (psi0 / PERSISTENCE_CAP / (1.0 - psi0 / PERSISTENCE_CAP)).ln(),
        (w0 / (1.0 - w0)).ln(),
    ];

    let objective = |x: &[f64], grad: &mut [f64]| -> f64 {
        let mu = x[0];
        let c = x[1].exp();
        let s_psi = sigmoid(x[2]);
        let psi = PERSISTENCE_CAP * s_psi;
        let w = sigmoid(x[3]);
        let a = psi * w;
        let b = psi * (1.0 - w);
        let dpsi = PERSISTENCE_CAP * s_psi * (1.0 - s_psi);
        let dw = w * (1.0 - w);

        let mut value = 0.0;
        let mut g = [0.0_f64; 4];
        let mut s2 = var;
        // sensitivities of sigma^2_t to (c, a, b), advanced with the
        // previous step's values before s2 itself is updated
        let mut dc = 0.0_f64;
        let mut da = 0.0_f64;
        let mut db = 0.0_f64;
        for t in 0..n {
            if t > 0 {
                let prev_s2 = s2;
                dc = 1.0 + b * dc;
                da = q[t - 1] * q[t - 1] + b * da;
                db = prev_s2 + b * db;
                s2 = c + a * q[t - 1] * q[t - 1] + b * prev_s2;
            }
            let e = q[t] - mu;
            value += 0.5 * (s2.ln() + e * e / s2);
            let dv_ds2 = 0.5 * (1.0 / s2 - e * e / (s2 * s2));
            g[0] += -e / s2;
            if t > 0 {
                g[1] += dv_ds2 * dc * c;
                g[2] += dv_ds2 * (da * w + db * (1.0 - w)) * dpsi;
                g[3] += dv_ds2 * (da - db) * psi * dw;
            }
        }
        grad.copy_from_slice(&g);
        value
    };

    let res = minimize_with(
        objective,
        &init,
        MinimizeOptions {
            tol: 1e-7,
            max_iters: 500,
        },
    );
    let x = &res.x;
    let mu = x[0];
    let c = x[1].exp();
    let psi = PERSISTENCE_CAP * sigmoid(x[2]);
    let w = sigmoid(x[3]);
    let a = psi * w;
    let b = psi * (1.0 - w);
    let mut sigma2_path = Vec::with_capacity(n);
    let mut s2 = var;
    sigma2_path.push(s2);
    for t in 1..n {
        s2 = c + a * q[t - 1] * q[t - 1] + b * s2;
        sigma2_path.push(s2);
    }
    Ok(GarchFit {
        mu,
        c,
        a,
        b,
        sigma2_path,
    })
}

/// Standardized residuals (Q_t - mu) / sigma_t.
pub fn filter_residuals(fit: &GarchFit, q: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(&fit.sigma2_path)
        .map(|(qt, s2)| (qt - fit.mu) / s2.sqrt())
        .collect()
}

/// Simulate a GARCH(1,1) path with Gaussian innovations; the first variance
/// starts at the unconditional level.
pub fn simulate_garch11(mu: f64, c: f64, a: f64, b: f64, n: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut q = Vec::with_capacity(n);
    let mut s2: f64 = c / (1.0 - a - b);
    for t in 0..n {
        if t > 0 {
            s2 = c + a * (q[t - 1] - 0.0) * (q[t - 1] - 0.0) + b * s2;
        }
        q.push(mu + s2.sqrt() * rng.normal());
    }
    q
}

/// Generalized Pareto MLE on excesses, parametrized in (log sigma, xi) with
/// xi bounded below at -0.5.
pub fn fit_gpd(excesses: &[f64]) -> Result<(f64, f64)> {
    let n = excesses.len();
    if n < 30 {
        return Err(Error::data(format!(
            "need at least 30 excesses for a tail fit, got {n}"
        )));
    }
    if excesses.iter().any(|y| !(*y >= 0.0)) {
        return Err(Error::data("negative excess in tail fit"));
    }
    let mean = excesses.iter().sum::<f64>() / n as f64;
    let objective = |x: &[f64], grad: &mut [f64]| -> f64 {
        let ln_sigma = x[0];
        let xi = x[1];
        let sigma = ln_sigma.exp();
        if xi < -0.5 {
            grad.fill(0.0);
            return f64::INFINITY;
        }
        let mut value = n as f64 * ln_sigma;
        let mut g0 = n as f64;
        let mut g1 = 0.0;
        if xi.abs() < 1e-6 {
            for &y in excesses {
                let z = y / sigma;
                value += z;
                g0 += -z;
                g1 += z * z / 2.0 - z;
            }
        } else {
            for &y in excesses {
                let u = 1.0 + xi * y / sigma;
                if u <= 0.0 {
                    grad.fill(0.0);
                    return f64::INFINITY;
                }
                let z = y / sigma;
                value += (1.0 + 1.0 / xi) * u.ln();
                g0 += -(1.0 + xi) * z / u;
                g1 += -u.ln() / (xi * xi) + (1.0 + 1.0 / xi) * z / u;
            }
        }
        grad[0] = g0;
        grad[1] = g1;
        value
    };
    let res = minimize_with(
        objective,
        &[mean.ln(), 0.1],
        MinimizeOptions {
            tol: 1e-8,
            max_iters: 500,
        },
    );
    let sigma = res.x[0].exp();
    let xi = res.x[1].max(-0.5);
    if !sigma.is_finite() || !xi.is_finite() {
        return Err(Error::optim("tail fit did not produce finite parameters"));
    }
    Ok((sigma, xi))
}

/// Semi-parametric margin: GPD in each tail, rank transform in the body.
/// Tail anchor points sit on order statistics so the spliced CDF is exactly
/// continuous; the effective tail fractions then differ from the requested
/// alpha by less than 1/(T+1).
#[derive(Debug, Clone)]
pub struct MarginalModel {
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    pub l: f64,
    pub h: f64,
    pub gpd_upper: (f64, f64),
    pub gpd_lower: (f64, f64),
    /// Sorted copy of the fitting sample; the body rank transform.
    pub body: Vec<f64>,
}

pub fn fit_margin(eps: &[f64], alpha_tail: f64) -> Result<MarginalModel> {
    if !(alpha_tail > 0.0 && alpha_tail < 0.5) {
        return Err(Error::config(format!(
            "tail fraction must lie in (0, 0.5), got {alpha_tail}"
        )));
    }
    let n = eps.len();
    let mut sorted = eps.to_vec();
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("nonfinite residual in margin fit"));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let np1 = (n + 1) as f64;
    let k_up = ((1.0 - alpha_tail) * np1).round() as usize;
    let k_lo = (alpha_tail * np1).round() as usize;
    if k_lo < 1 || k_up > n || k_lo >= k_up {
        return Err(Error::data(format!(
            "sample too small ({n}) for tail fraction {alpha_tail}"
        )));
    }
    let h = sorted[k_up - 1];
    let l = sorted[k_lo - 1];

    let upper_excesses: Vec<f64> = sorted.iter().filter(|e| **e > h).map(|e| e - h).collect();
    let lower_excesses: Vec<f64> = sorted.iter().filter(|e| **e < l).map(|e| l - e).collect();
    if upper_excesses.len() < 30 {
        return Err(Error::data(format!(
            "upper tail has only {} exceedances; need at least 30",
            upper_excesses.len()
        )));
    }
    if lower_excesses.len() < 30 {
        return Err(Error::data(format!(
            "lower tail has only {} exceedances; need at least 30",
            lower_excesses.len()
        )));
    }
    let rank_h = sorted.partition_point(|e| *e <= h);
    let rank_l = sorted.partition_point(|e| *e <= l);
    let alpha_upper = 1.0 - rank_h as f64 / np1;
    let alpha_lower = rank_l as f64 / np1;

    Ok(MarginalModel {
        alpha_upper,
        alpha_lower,
        l,
        h,
        gpd_upper: fit_gpd(&upper_excesses)?,
        gpd_lower: fit_gpd(&lower_excesses)?,
        body: sorted,
    })
}

impl MarginalModel {
    /// The spliced CDF.
    pub fn cdf(&self, e: f64) -> f64 {
        if e > self.h {
            1.0 - self.upper_survival(e)
        } else if e < self.l {
            let (sigma, xi) = self.gpd_lower;
            self.alpha_lower * gpd_survival((self.l - e) / sigma, xi)
        } else {
            let rank = self.body.partition_point(|x| *x <= e);
            rank as f64 / (self.body.len() + 1) as f64
        }
    }

    /// Survivor of the upper branch, valid for e > h.
    fn upper_survival(&self, e: f64) -> f64 {
        let (sigma, xi) = self.gpd_upper;
        self.alpha_upper * gpd_survival((e - self.h) / sigma, xi)
    }

    /// Residual scale -> standard Laplace, survivor-parametrized in the
    /// upper tail for accuracy.
    pub fn to_laplace_value(&self, e: f64) -> Result<f64> {
        if !e.is_finite() {
            return Err(Error::domain(format!("nonfinite residual {e}")));
        }
        if e > self.h {
            let s = self.upper_survival(e);
            if s <= 0.0 {
                return Err(Error::domain(
                    "residual beyond the finite upper endpoint of the fitted tail",
                ));
            }
            laplace_quantile_from_survival(s)
        } else {
            let u = self.cdf(e);
            if u <= 0.0 {
                return Err(Error::domain(
                    "residual beyond the finite lower endpoint of the fitted tail",
                ));
            }
            laplace_quantile(u)
        }
    }

    /// Laplace scale -> residual scale: closed-form tail inverses, order
    /// statistic lookup in the body (the bisection limit of the rank CDF).
    pub fn from_laplace_value(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::domain(format!("nonfinite laplace value {x}")));
        }
        let u = laplace_cdf(x);
        let s = laplace_survival(x);
        let np1 = (self.body.len() + 1) as f64;
        if s < self.alpha_upper {
            let (sigma, xi) = self.gpd_upper;
            return Ok(self.h + sigma * gpd_survival_inverse(s / self.alpha_upper, xi));
        }
        if u < self.alpha_lower {
            let (sigma, xi) = self.gpd_lower;
            return Ok(self.l - sigma * gpd_survival_inverse(u / self.alpha_lower, xi));
        }
        // smallest order statistic whose rank/(T+1) reaches u; the epsilon
        // absorbs rounding when u came from an exact rank
        let target = u * np1 - 1e-9;
        let idx = (target.ceil() as usize).clamp(1, self.body.len());
        Ok(self.body[idx - 1])
    }
}

/// GPD survivor (1 + xi z)^(-1/xi), exponential at xi = 0.
fn gpd_survival(z: f64, xi: f64) -> f64 {
    if z < 0.0 {
        return 1.0;
    }
    if xi.abs() < 1e-10 {
        (-z).exp()
    } else {
        let u = 1.0 + xi * z;
        if u <= 0.0 {
            0.0
        } else {
            u.powf(-1.0 / xi)
        }
    }
}

/// Inverse of the GPD survivor: z with (1 + xi z)^(-1/xi) = p.
fn gpd_survival_inverse(p: f64, xi: f64) -> f64 {
    if xi.abs() < 1e-10 {
        -p.ln()
    } else {
        (p.powf(-xi) - 1.0) / xi
    }
}

/// Per-window Laplace location/scale MLEs over non-overlapping windows:
/// location is the median, scale the mean absolute deviation from it.
pub fn rolling_laplace_check(x: &[f64], window: usize) -> Result<Vec<(f64, f64)>> {
    if window < 200 {
        return Err(Error::config(format!(
            "rolling window must be at least 200, got {window}"
        )));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + window <= x.len() {
        let w = &x[start..start + window];
        let mut v = w.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let loc = if window % 2 == 1 {
            v[window / 2]
        } else {
            0.5 * (v[window / 2 - 1] + v[window / 2])
        };
        let scale = w.iter().map(|xi| (xi - loc).abs()).sum::<f64>() / window as f64;
        out.push((loc, scale));
        start += window;
    }
    Ok(out)
}

/// The full marginal pipeline for one asset: volatility filter plus margin.
#[derive(Debug, Clone)]
pub struct MarginalPipeline {
    pub garch: GarchFit,
    pub margin: MarginalModel,
}

impl MarginalPipeline {
    /// Fit both stages on a returns series.
    pub fn fit(q: &[f64], alpha_tail: f64) -> Result<Self> {
        let garch = fit_garch11(q)?;
        let eps = filter_residuals(&garch, q);
        let margin = fit_margin(&eps, alpha_tail)?;
        Ok(MarginalPipeline { garch, margin })
    }

    /// Residuals and their Laplace-scale values for the fitting series.
    pub fn standardize(&self, q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let eps = filter_residuals(&self.garch, q);
        let lap: Result<Vec<f64>> = eps.iter().map(|e| self.margin.to_laplace_value(*e)).collect();
        Ok((eps, lap?))
    }

    /// Map a Laplace-scale value at time index `t` (0-based into the fitted
    /// path) back to a return.
    pub fn return_from_laplace(&self, x: f64, t: usize) -> Result<f64> {
        let s2 = *self
            .garch
            .sigma2_path
            .get(t)
            .ok_or_else(|| Error::domain(format!("time index {t} outside the fitted path")))?;
        let eps = self.margin.from_laplace_value(x)?;
        Ok(self.garch.mu + s2.sqrt() * eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_returns_basics() {
        let q = log_returns(&[100.0, 100.0 * (0.01_f64).exp()]).unwrap();
        assert!((q[0] - 0.01).abs() < 1e-14);
        let q = log_returns(&[100.0, 110.0, 99.0]).unwrap();
        assert!((q[0] - (1.1_f64).ln()).abs() < 1e-14);
        assert!((q[1] - (0.9_f64).ln()).abs() < 1e-14);
        let q = log_returns(&[5.0, 5.0, 5.0]).unwrap();
        assert!(q.iter().all(|v| *v == 0.0));
        assert!(log_returns(&[1.0, -2.0]).is_err());
        assert!(log_returns(&[1.0]).is_err());
    }

    #[test]
    fn garch_recovers_simulated_parameters() {
        let mut rng = RngStream::new(77, 0);
        let q = simulate_garch11(0.0, 1e-5, 0.08, 0.9, 20_000, &mut rng);
        let fit = fit_garch11(&q).unwrap();
        assert!((fit.a - 0.08).abs() <= 0.02, "a = {}", fit.a);
        assert!((fit.b - 0.9).abs() <= 0.03, "b = {}", fit.b);
        assert!(fit.a + fit.b < 1.0);
        assert!(fit.c > 0.0);
        assert!(fit.sigma2_path.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn garch_on_iid_noise_finds_no_arch() {
        let mut rng = RngStream::new(78, 1);
        let q: Vec<f64> = (0..20_000).map(|_| 0.01 * rng.normal()).collect();
        let fit = fit_garch11(&q).unwrap();
        assert!(fit.a <= 0.03, "a = {}", fit.a);
    }

    #[test]
    fn garch_rejects_constant_series() {
        let q = vec![0.001; 500];
        assert!(matches!(fit_garch11(&q), Err(Error::Data(_))));
    }

    #[test]
    fn residual_filter_inverts_simulation() {
        // residuals of a fit on data generated from those exact parameters
        // reproduce the innovations when the parameters are supplied
        let mut rng = RngStream::new(79, 2);
        let n = 5000;
        let (mu, c, a, b) = (0.0005, 2e-6, 0.1, 0.85);
        let mut innovations = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut s2: f64 = c / (1.0 - a - b);
        let mut path = Vec::with_capacity(n);
        for t in 0..n {
            if t > 0 {
                s2 = c + a * q[t - 1] * q[t - 1] + b * s2;
            }
            path.push(s2);
            let z = rng.normal();
            innovations.push(z);
            q.push(mu + s2.sqrt() * z);
        }
        let fit = GarchFit {
            mu,
            c,
            a,
            b,
            sigma2_path: path,
        };
        let eps = filter_residuals(&fit, &q);
        for (e, z) in eps.iter().zip(&innovations) {
            assert!((e - z).abs() < 1e-12);
        }
        // squared-residual autocorrelation is flat for the exact filter
        let m = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
        let sq: Vec<f64> = eps.iter().map(|e| e * e - m).collect();
        let denom: f64 = sq.iter().map(|v| v * v).sum();
        for lag in 1..=20 {
            let num: f64 = sq.windows(lag + 1).map(|w| w[0] * w[lag]).sum();
            let acf = num / denom;
            assert!(
                acf.abs() <= 3.0 / (n as f64).sqrt(),
                "lag {lag} acf {acf}"
            );
        }
    }

    #[test]
    fn gpd_recovers_shape() {
        let mut rng = RngStream::new(80, 3);
        let (sigma, xi) = (1.0, 0.2);
        let excesses: Vec<f64> = (0..2000)
            .map(|_| {
                let u: f64 = rng.uniform_open();
                sigma * (u.powf(-xi) - 1.0) / xi
            })
            .collect();
        let (s_hat, xi_hat) = fit_gpd(&excesses).unwrap();
        assert!((xi_hat - xi).abs() <= 0.08, "xi = {xi_hat}");
        assert!((s_hat - sigma).abs() <= 0.15, "sigma = {s_hat}");
    }

    #[test]
    fn margin_splice_is_continuous() {
        let mut rng = RngStream::new(81, 4);
        // T = 1999 makes (1 - 0.03)(T + 1) an integer, so the effective
        // fractions equal the requested one exactly
        let eps: Vec<f64> = (0..1999).map(|_| rng.normal()).collect();
        let m = fit_margin(&eps, 0.03).unwrap();
        assert!((m.alpha_upper - 0.03).abs() < 1e-12);
        assert!((m.alpha_lower - 0.03).abs() < 1e-12);
        // upper branch at h equals the body value 1 - alpha
        let at_h = m.cdf(m.h);
        assert!((at_h - 0.97).abs() < 1e-12, "cdf at h = {at_h}");
        let just_above = m.cdf(m.h + 1e-12);
        assert!((just_above - 0.97).abs() < 1e-9);
        let at_l = m.cdf(m.l);
        assert!((at_l - 0.03).abs() < 1e-12);
        let just_below = m.cdf(m.l - 1e-12);
        assert!((just_below - 0.03).abs() < 1e-9);
    }

    #[test]
    fn margin_cdf_monotone_on_grid() {
        let mut rng = RngStream::new(82, 5);
        let eps: Vec<f64> = (0..3000).map(|_| rng.laplace()).collect();
        let m = fit_margin(&eps, 0.03).unwrap();
        let lo = m.body[0] - 1.0;
        let hi = m.body[m.body.len() - 1] + 1.0;
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let e = lo + (hi - lo) * i as f64 / 10_000.0;
            let u = m.cdf(e);
            assert!(u >= prev - 1e-15, "non-monotone at {e}");
            prev = u;
        }
    }

    #[test]
    fn laplace_round_trip_in_tails_and_median() {
        let mut rng = RngStream::new(83, 6);
        let eps: Vec<f64> = (0..4000).map(|_| rng.normal()).collect();
        let m = fit_margin(&eps, 0.05).unwrap();
        // tails round trip to high precision
        for e in [m.h + 0.3, m.h + 2.0, m.l - 0.3, m.l - 1.5] {
            let x = m.to_laplace_value(e).unwrap();
            let back = m.from_laplace_value(x).unwrap();
            assert!((back - e).abs() < 1e-8, "round trip {e} -> {x} -> {back}");
        }
        // body round trip lands back on data points
        for &e in m.body.iter().step_by(497) {
            if e > m.l && e < m.h {
                let x = m.to_laplace_value(e).unwrap();
                let back = m.from_laplace_value(x).unwrap();
                assert!((back - e).abs() < 1e-12);
            }
        }
        // empirical median maps near zero
        let med = m.body[m.body.len() / 2];
        let x = m.to_laplace_value(med).unwrap();
        assert!(x.abs() < 0.01, "median maps to {x}");
    }

    #[test]
    fn upper_tail_closed_form_chain() {
        // above h the composition is laplace_quantile(1 - alpha * gpd_sf)
        let mut rng = RngStream::new(84, 7);
        let eps: Vec<f64> = (0..2000).map(|_| rng.laplace()).collect();
        let m = fit_margin(&eps, 0.04).unwrap();
        let (sigma, xi) = m.gpd_upper;
        let e = m.h + 1.7;
        let sf = m.alpha_upper * (1.0 + xi * (e - m.h) / sigma).powf(-1.0 / xi);
        let expect = -(2.0 * sf).ln();
        let got = m.to_laplace_value(e).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn to_laplace_fraction_positive_near_half() {
        let mut rng = RngStream::new(85, 8);
        let eps: Vec<f64> = (0..6000).map(|_| 0.4 * rng.normal() + 0.1 * rng.laplace()).collect();
        let m = fit_margin(&eps, 0.03).unwrap();
        let lap: Vec<f64> = eps.iter().map(|e| m.to_laplace_value(*e).unwrap()).collect();
        let pos = lap.iter().filter(|x| **x > 0.0).count() as f64 / lap.len() as f64;
        assert!((0.47..=0.53).contains(&pos), "positive fraction {pos}");
    }

    #[test]
    fn rolling_laplace_windows() {
        let mut rng = RngStream::new(86, 9);
        let x: Vec<f64> = (0..10_000).map(|_| rng.laplace()).collect();
        let checks = rolling_laplace_check(&x, 1000).unwrap();
        assert_eq!(checks.len(), 10);
        for (loc, scale) in &checks {
            assert!(loc.abs() <= 0.12, "window location {loc}");
            assert!((scale - 1.0).abs() <= 0.12, "window scale {scale}");
        }
        // equivariance
        let shifted: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        for (loc, _) in rolling_laplace_check(&shifted, 1000).unwrap() {
            assert!((loc - 1.0).abs() <= 0.12);
        }
        let scaled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        for (_, scale) in rolling_laplace_check(&scaled, 1000).unwrap() {
            assert!((scale - 2.0).abs() <= 0.24);
        }
        assert!(rolling_laplace_check(&x, 100).is_err());
    }

    #[test]
    fn pipeline_end_to_end_inversion() {
        let mut rng = RngStream::new(87, 10);
        let q = simulate_garch11(0.0002, 5e-6, 0.07, 0.88, 3000, &mut rng);
        let pipe = MarginalPipeline::fit(&q, 0.03).unwrap();
        let (eps, lap) = pipe.standardize(&q).unwrap();
        assert_eq!(eps.len(), q.len());
        // reconstruct each return from its Laplace value
        let mut worst: f64 = 0.0;
        for t in 0..q.len() {
            let back = pipe.return_from_laplace(lap[t], t).unwrap();
            worst = worst.max((back - q[t]).abs());
        }
        assert!(worst < 1e-8, "worst reconstruction error {worst}");
    }
}
