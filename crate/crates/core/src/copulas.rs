//! The five time-varying dependence examples on standard Laplace margins:
//! samplers, joint log densities, and a density-ray oracle for the true
//! gauge values.
//!
//! Everything runs through survivor-parametrized transforms so that margins
//! are exact deep into the tails, where plain CDF round trips would lose all
//! precision to 1 - u cancellation.

use crate::error::{Error, Result};
use crate::geometry::{unit_point, NormKind};
use crate::numerics::special::{
    ln_normal_cdf, ln_student_t_pdf, normal_quantile, student_t_quantile,
};
use crate::numerics::{
    laplace_cdf, laplace_quantile_from_survival, laplace_survival, ln_laplace_pdf, RngStream,
};
use crate::types::{BivariateSeries, MarginScale};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaFamily {
    /// Gaussian copula, correlation interpolating linearly between the ends.
    GaussianLinear { rho_start: f64, rho_end: f64 },
    /// Gaussian copula with the harmonic + drift correlation trajectory
    /// 0.45 u + 0.5 sin(2.5 pi u), u = (t-1)/(T-1).
    GaussianHarmonic,
    /// Inverted bivariate extreme value copula, logistic family; dependence
    /// parameter interpolating linearly.
    InvertedLogistic { alpha_start: f64, alpha_end: f64 },
    /// Student-t copula: fixed collinearity, degrees of freedom
    /// interpolating linearly.
    StudentT { sigma: f64, nu_start: f64, nu_end: f64 },
    /// Laplace common-factor model with Gaussian-copula noise; the factor
    /// weight delta interpolates linearly and crosses the AI/AD boundary at
    /// delta = 1.
    HuserWadsworth { rho: f64, delta_start: f64, delta_end: f64 },
}

impl CopulaFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CopulaFamily::GaussianLinear { .. } => "gaussian_linear",
            CopulaFamily::GaussianHarmonic => "gaussian_harmonic",
            CopulaFamily::InvertedLogistic { .. } => "inverted_logistic",
            CopulaFamily::StudentT { .. } => "student_t",
            CopulaFamily::HuserWadsworth { .. } => "huser_wadsworth",
        }
    }

    /// The study trajectories for each family by name.
    pub fn standard(name: &str) -> Result<Self> {
        match name {
            "gaussian_linear" => Ok(CopulaFamily::GaussianLinear {
                rho_start: 0.2,
                rho_end: 0.8,
            }),
            "gaussian_harmonic" => Ok(CopulaFamily::GaussianHarmonic),
            "inverted_logistic" => Ok(CopulaFamily::InvertedLogistic {
                alpha_start: 0.3,
                alpha_end: 0.7,
            }),
            "student_t" => Ok(CopulaFamily::StudentT {
                sigma: 0.5,
                nu_start: 0.5,
                nu_end: 2.0,
            }),
            "huser_wadsworth" => Ok(CopulaFamily::HuserWadsworth {
                rho: 0.5,
                delta_start: 0.7,
                delta_end: 2.5,
            }),
            other => Err(Error::config(format!("unknown copula family '{other}'"))),
        }
    }

    pub fn standard_names() -> [&'static str; 5] {
        [
            "gaussian_linear",
            "gaussian_harmonic",
            "inverted_logistic",
            "student_t",
            "huser_wadsworth",
        ]
    }
}

/// A dependence family plus a horizon; parameters at each t come from the
/// family's trajectory over (t-1)/(T-1).
#[derive(Debug, Clone, Copy)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    pub horizon: usize,
}

/// Parameter values of one family at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaParams {
    Gaussian { rho: f64 },
    InvertedLogistic { alpha: f64 },
    StudentT { sigma: f64, nu: f64 },
    HuserWadsworth { rho: f64, delta: f64 },
}

impl CopulaSpec {
    pub fn new(family: CopulaFamily, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::config(format!(
                "copula horizon must be at least 2, got {horizon}"
            )));
        }
        let spec = CopulaSpec { family, horizon };
        // validate the whole trajectory, which may be non-monotone
        for t in 1..=horizon {
            match spec.params_at(t as f64) {
                CopulaParams::Gaussian { rho } => {
                    if !(-1.0 < rho && rho < 1.0) {
                        return Err(Error::config(format!(
                            "correlation {rho} at t={t} outside (-1,1)"
                        )));
                    }
                }
                CopulaParams::InvertedLogistic { alpha } => {
                    if !(0.0 < alpha && alpha < 1.0) {
                        return Err(Error::config(format!(
                            "logistic dependence {alpha} at t={t} outside (0,1)"
                        )));
                    }
                }
                CopulaParams::StudentT { sigma, nu } => {
                    if !(-1.0 < sigma && sigma < 1.0) || !(nu > 0.0) {
                        return Err(Error::config(format!(
                            "student-t parameters (sigma={sigma}, nu={nu}) invalid at t={t}"
                        )));
                    }
                }
                CopulaParams::HuserWadsworth { rho, delta } => {
                    if !(-1.0 < rho && rho < 1.0) || !(delta > 0.0) {
                        return Err(Error::config(format!(
                            "factor model parameters (rho={rho}, delta={delta}) invalid at t={t}"
                        )));
                    }
                }
            }
        }
        Ok(spec)
    }

    fn frac(&self, t: f64) -> f64 {
        (t - 1.0) / (self.horizon as f64 - 1.0)
    }

    pub fn params_at(&self, t: f64) -> CopulaParams {
        let u = self.frac(t);
        match self.family {
            CopulaFamily::GaussianLinear { rho_start, rho_end } => CopulaParams::Gaussian {
                rho: rho_start + (rho_end - rho_start) * u,
            },
            CopulaFamily::GaussianHarmonic => CopulaParams::Gaussian {
                rho: 0.45 * u + 0.5 * (2.5 * std::f64::consts::PI * u).sin(),
            },
            CopulaFamily::InvertedLogistic {
                alpha_start,
                alpha_end,
            } => CopulaParams::InvertedLogistic {
                alpha: alpha_start + (alpha_end - alpha_start) * u,
            },
            CopulaFamily::StudentT {
                sigma,
                nu_start,
                nu_end,
            } => CopulaParams::StudentT {
                sigma,
                nu: nu_start + (nu_end - nu_start) * u,
            },
            CopulaFamily::HuserWadsworth {
                rho,
                delta_start,
                delta_end,
            } => CopulaParams::HuserWadsworth {
                rho,
                delta: delta_start + (delta_end - delta_start) * u,
            },
        }
    }

    /// Compact parameter description for file headers.
    pub fn describe(&self) -> String {
        match self.family {
            CopulaFamily::GaussianLinear { rho_start, rho_end } => {
                format!("gaussian_linear rho={rho_start}..{rho_end} T={}", self.horizon)
            }
            CopulaFamily::GaussianHarmonic => {
                format!("gaussian_harmonic rho=0.45u+0.5sin(2.5*pi*u) T={}", self.horizon)
            }
            CopulaFamily::InvertedLogistic {
                alpha_start,
                alpha_end,
            } => format!(
                "inverted_logistic alpha={alpha_start}..{alpha_end} T={}",
                self.horizon
            ),
            CopulaFamily::StudentT {
                sigma,
                nu_start,
                nu_end,
            } => format!(
                "student_t sigma={sigma} nu={nu_start}..{nu_end} T={}",
                self.horizon
            ),
            CopulaFamily::HuserWadsworth {
                rho,
                delta_start,
                delta_end,
            } => format!(
                "huser_wadsworth rho={rho} delta={delta_start}..{delta_end} T={}",
                self.horizon
            ),
        }
    }
}

// --- marginal transform helpers, survivor-parametrized for tail accuracy ---

/// z with Phi(z) = F_L(x), exact in both tails.
fn laplace_to_normal(x: f64) -> Result<f64> {
    if x < 0.0 {
        normal_quantile(laplace_cdf(x))
    } else {
        Ok(-normal_quantile(laplace_survival(x))?)
    }
}

/// x with F_L(x) = Phi(z), stable via ln Phi in the tails.
fn normal_to_laplace(z: f64) -> f64 {
    if z < 0.0 {
        std::f64::consts::LN_2 + ln_normal_cdf(z)
    } else {
        -(std::f64::consts::LN_2 + ln_normal_cdf(-z))
    }
}

/// Standard exponential margin value e with 1 - e^{-e} = F_L(x).
fn laplace_to_exponential(x: f64) -> f64 {
    if x >= 0.0 {
        x + std::f64::consts::LN_2
    } else {
        -(-0.5 * x.exp()).ln_1p()
    }
}

/// Inverse of `laplace_to_exponential`.
fn exponential_to_laplace(e: f64) -> f64 {
    if e >= std::f64::consts::LN_2 {
        e - std::f64::consts::LN_2
    } else {
        ((-(-e).exp_m1()) * 2.0).ln()
    }
}

/// t-margin value w with T_nu(w) = F_L(x), survivor-parametrized.
fn laplace_to_student_t(x: f64, nu: f64) -> Result<f64> {
    if x < 0.0 {
        student_t_quantile(laplace_cdf(x), nu)
    } else {
        Ok(-student_t_quantile(laplace_survival(x), nu)?)
    }
}

/// Upper-tail probability P(T > t) for t >= 0 without 1 - u cancellation.
fn student_t_tail(t: f64, nu: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let xb = nu / (nu + t * t);
    0.5 * crate::numerics::special::reg_inc_beta(xb, 0.5 * nu, 0.5)
}

fn student_t_to_laplace(w: f64, nu: f64) -> Result<f64> {
    if w >= 0.0 {
        laplace_quantile_from_survival(student_t_tail(w, nu))
    } else {
        Ok(-laplace_quantile_from_survival(student_t_tail(-w, nu))?)
    }
}

// --- sampling ---

/// One draw from the family at time t, on standard Laplace margins.
pub fn sample_at(spec: &CopulaSpec, t: f64, rng: &mut RngStream) -> (f64, f64) {
    match spec.params_at(t) {
        CopulaParams::Gaussian { rho } => {
            let z1 = rng.normal();
            let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * rng.normal();
            (normal_to_laplace(z1), normal_to_laplace(z2))
        }
        CopulaParams::StudentT { sigma, nu } => {
            let z1 = rng.normal();
            let z2 = sigma * z1 + (1.0 - sigma * sigma).sqrt() * rng.normal();
            let g = (rng.chi_squared(nu) / nu).sqrt();
            let w1 = z1 / g;
            let w2 = z2 / g;
            (
                student_t_to_laplace(w1, nu).expect("finite t margin"),
                student_t_to_laplace(w2, nu).expect("finite t margin"),
            )
        }
        CopulaParams::InvertedLogistic { alpha } => {
            let e1 = rng.exponential();
            let u = rng.uniform_open();
            let e2 = inv_logistic_conditional_quantile(e1, u, alpha);
            (exponential_to_laplace(e1), exponential_to_laplace(e2))
        }
        CopulaParams::HuserWadsworth { rho, delta } => {
            let s = rng.laplace();
            let z1 = rng.normal();
            let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * rng.normal();
            let v1 = normal_to_laplace(z1);
            let v2 = normal_to_laplace(z2);
            let (y1, y2) = if delta < 1.0 {
                (delta * s + v1, delta * s + v2)
            } else {
                (s + v1 / delta, s + v2 / delta)
            };
            let marg = HwMargin::new(delta);
            (marg.to_laplace(y1), marg.to_laplace(y2))
        }
    }
}

/// A full path: one draw per t in {1,...,T}, independent across t.
pub fn sample_path(spec: &CopulaSpec, rng: &mut RngStream) -> BivariateSeries {
    let t_len = spec.horizon;
    let mut ts = Vec::with_capacity(t_len);
    let mut x1 = Vec::with_capacity(t_len);
    let mut x2 = Vec::with_capacity(t_len);
    for t in 1..=t_len {
        let (a, b) = sample_at(spec, t as f64, rng);
        ts.push(t as f64);
        x1.push(a);
        x2.push(b);
    }
    BivariateSeries::new(ts, x1, x2, MarginScale::Laplace).expect("consistent lengths")
}

/// Conditional survivor of the inverted logistic on exponential margins:
/// S(e2 | e1) = (s1/e1) S^{alpha-1} exp(e1 - S^alpha), s_i = e_i^{1/alpha},
/// S = s1 + s2. Solved for e2 by bisection; decreasing from 1 at e2 = 0.
fn inv_logistic_conditional_quantile(e1: f64, u: f64, alpha: f64) -> f64 {
    let surv = |e2: f64| -> f64 {
        let s1 = e1.powf(1.0 / alpha);
        let s2 = e2.powf(1.0 / alpha);
        let s = s1 + s2;
        ((1.0 / alpha - 1.0) * e1.ln() + (alpha - 1.0) * s.ln() + e1 - s.powf(alpha)).exp()
    };
    let mut hi = 1.0_f64;
    while surv(hi) > u && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0_f64;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if surv(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Marginal distribution of one component of the factor model: the sum of
/// two independent centered Laplace variables with rates 1 and
/// r = max(delta, 1/delta); closed form away from r = 1, continuity limit
/// within 1e-6 of it.
#[derive(Debug, Clone, Copy)]
pub struct HwMargin {
    rate_big: f64,
}

impl HwMargin {
    pub fn new(delta: f64) -> Self {
        let rate_big = if delta < 1.0 { 1.0 / delta } else { delta };
        HwMargin { rate_big }
    }

    /// Survivor function at y >= 0.
    pub fn survival(&self, y: f64) -> f64 {
        debug_assert!(y >= 0.0);
        let b = self.rate_big;
        if (b - 1.0).abs() < 1e-6 {
            // equal-rates limit: S(y) = e^{-y} (2 + y) / 4
            (-y).exp() * (2.0 + y) / 4.0
        } else {
            (b * b * (-y).exp() - (-b * y).exp()) / (2.0 * (b * b - 1.0))
        }
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        let b = self.rate_big;
        let a = y.abs();
        if (b - 1.0).abs() < 1e-6 {
            (-a) + ((1.0 + a) / 4.0).ln()
        } else {
            let v = b * (b * (-a).exp() - (-b * a).exp()) / (2.0 * (b * b - 1.0));
            v.ln()
        }
    }

    /// Map a sample of the sum onto the standard Laplace scale, exact in
    /// both tails.
    pub fn to_laplace(&self, y: f64) -> f64 {
        if y >= 0.0 {
            laplace_quantile_from_survival(self.survival(y)).expect("survivor in (0,1)")
        } else {
            -laplace_quantile_from_survival(self.survival(-y)).expect("survivor in (0,1)")
        }
    }

    /// Inverse of `to_laplace`: the sum-scale value whose survivor matches
    /// the Laplace survivor of x. Newton on ln S with bisection safeguard.
    pub fn from_laplace(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let target = laplace_survival(x.abs()).ln();
        let b = self.rate_big;
        // asymptote ln S(y) ~ -y + ln(b^2/(2(b^2-1))) gives the start
        let shift = if (b - 1.0).abs() < 1e-6 {
            -(4.0_f64 / 2.0).ln()
        } else {
            (b * b / (2.0 * (b * b - 1.0))).ln()
        };
        let mut y = (shift - target).max(0.0);
        let mut lo = 0.0_f64;
        let mut hi = f64::INFINITY;
        for _ in 0..100 {
            let s = self.survival(y);
            let f = s.ln() - target;
            if f.abs() < 1e-13 {
                break;
            }
            if f > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            // d/dy ln S = -pdf / S
            let deriv = -(self.ln_pdf(y) - s.ln()).exp();
            let mut next = y - f / deriv;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { y * 2.0 + 1.0 };
            }
            y = next;
        }
        if x >= 0.0 {
            y
        } else {
            -y
        }
    }
}

// --- joint log densities on Laplace margins ---

/// Log density of the Gaussian copula with standard Laplace margins.
fn gaussian_laplace_log_density(rho: f64, x: (f64, f64)) -> Result<f64> {
    let z1 = laplace_to_normal(x.0)?;
    let z2 = laplace_to_normal(x.1)?;
    let det = 1.0 - rho * rho;
    let quad = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / det;
    let ln_biv = -LN_2PI - 0.5 * det.ln() - 0.5 * quad;
    let ln_jac = ln_laplace_pdf(x.0) + 0.5 * z1 * z1 + 0.5 * LN_2PI + ln_laplace_pdf(x.1)
        + 0.5 * z2 * z2
        + 0.5 * LN_2PI;
    Ok(ln_biv + ln_jac)
}

/// Joint log density of the chosen family at time t, point on Laplace scale.
pub fn joint_log_density(spec: &CopulaSpec, t: f64, x: (f64, f64)) -> Result<f64> {
    if !x.0.is_finite() || !x.1.is_finite() {
        return Err(Error::domain("density evaluation at nonfinite point"));
    }
    match spec.params_at(t) {
        CopulaParams::Gaussian { rho } => gaussian_laplace_log_density(rho, x),
        CopulaParams::StudentT { sigma, nu } => {
            let w1 = laplace_to_student_t(x.0, nu)?;
            let w2 = laplace_to_student_t(x.1, nu)?;
            let det = 1.0 - sigma * sigma;
            let quad = (w1 * w1 - 2.0 * sigma * w1 * w2 + w2 * w2) / det;
            let ln_biv = crate::numerics::special::ln_gamma(0.5 * (nu + 2.0))
                - crate::numerics::special::ln_gamma(0.5 * nu)
                - (nu * std::f64::consts::PI).ln()
                - 0.5 * det.ln()
                - 0.5 * (nu + 2.0) * (1.0 + quad / nu).ln();
            let ln_jac = ln_laplace_pdf(x.0) - ln_student_t_pdf(w1, nu) + ln_laplace_pdf(x.1)
                - ln_student_t_pdf(w2, nu);
            Ok(ln_biv + ln_jac)
        }
        CopulaParams::InvertedLogistic { alpha } => {
            let e1 = laplace_to_exponential(x.0);
            let e2 = laplace_to_exponential(x.1);
            let ln_s1 = e1.ln() / alpha;
            let ln_s2 = e2.ln() / alpha;
            let ln_s_sum = log_add(ln_s1, ln_s2);
            let v = (alpha * ln_s_sum).exp();
            // f_E = e^{-V} (s1 s2 / (e1 e2)) S^{alpha-2} (V + 1 - alpha)
            let ln_fe = -v + (1.0 / alpha - 1.0) * (e1.ln() + e2.ln())
                + (alpha - 2.0) * ln_s_sum
                + (v + 1.0 - alpha).ln();
            // de/dx = f_L(x) / (1 - F_L(x)); exactly 1 for x >= 0
            let ln_jac = hazard_ln(x.0) + hazard_ln(x.1);
            Ok(ln_fe + ln_jac)
        }
        CopulaParams::HuserWadsworth { rho, delta } => {
            let marg = HwMargin::new(delta);
            let y1 = marg.from_laplace(x.0);
            let y2 = marg.from_laplace(x.1);
            let ln_fy = hw_joint_log_density(rho, delta, (y1, y2))?;
            let ln_jac = ln_laplace_pdf(x.0) - marg.ln_pdf(y1) + ln_laplace_pdf(x.1)
                - marg.ln_pdf(y2);
            Ok(ln_fy + ln_jac)
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln of the Laplace hazard f_L(x)/(1 - F_L(x)).
fn hazard_ln(x: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else {
        ln_laplace_pdf(x) - laplace_survival(x).ln()
    }
}

/// Log density of the factor-model sum before marginal standardization, by
/// one-dimensional convolution of the Laplace factor against the
/// Gaussian-copula noise density.
fn hw_joint_log_density(rho: f64, delta: f64, y: (f64, f64)) -> Result<f64> {
    // integrand kinks: s = 0 plus the points where each noise argument is 0
    let (k1, k2) = if delta < 1.0 {
        (y.0 / delta, y.1 / delta)
    } else {
        (y.0, y.1)
    };
    let mut breaks = [0.0, k1, k2];
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pad = 60.0;
    let ln_integrand = |s: f64| -> f64 {
        let f_s = -std::f64::consts::LN_2 - s.abs();
        let noise = if delta < 1.0 {
            gaussian_laplace_log_density(rho, (y.0 - delta * s, y.1 - delta * s))
        } else {
            gaussian_laplace_log_density(rho, (delta * (y.0 - s), delta * (y.1 - s)))
                .map(|v| v + 2.0 * delta.ln())
        };
        f_s + noise.unwrap_or(f64::NEG_INFINITY)
    };
    // peak location from a coarse scan, for the log-space shift
    let lo = breaks[0] - pad;
    let hi = breaks[2] + pad;
    let mut peak = f64::NEG_INFINITY;
    let scan_n = 400;
    for i in 0..=scan_n {
        let s = lo + (hi - lo) * i as f64 / scan_n as f64;
        peak = peak.max(ln_integrand(s));
    }
    if !peak.is_finite() {
        return Err(Error::domain("factor-model density underflow"));
    }
    let segments = [
        (lo, breaks[0]),
        (breaks[0], breaks[1]),
        (breaks[1], breaks[2]),
        (breaks[2], hi),
    ];
    let mut total = 0.0;
    for (a, b) in segments {
        if b - a < 1e-12 {
            continue;
        }
        total += romberg(|s| (ln_integrand(s) - peak).exp(), a, b);
    }
    Ok(peak + total.ln())
}

/// Romberg integration, fixed depth; integrand assumed smooth on [a, b].
fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const DEPTH: usize = 10;
    let mut r = [[0.0_f64; DEPTH]; DEPTH];
    let mut h = b - a;
    r[0][0] = 0.5 * h * (f(a) + f(b));
    for i in 1..DEPTH {
        h *= 0.5;
        let n = 1usize << (i - 1);
        let mut sum = 0.0;
        for k in 0..n {
            sum += f(a + h * (2.0 * k as f64 + 1.0));
        }
        r[i][0] = 0.5 * r[i - 1][0] + h * sum;
        let mut factor = 1.0;
        for j in 1..=i {
            factor *= 4.0;
            r[i][j] = r[i][j - 1] + (r[i][j - 1] - r[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    r[DEPTH - 1][DEPTH - 1]
}

// --- density-ray gauge oracle ---

/// A gauge value from the density-ray limit, with a flag set when the u
/// ladder had to shrink to keep the density representable.
#[derive(Debug, Clone, Copy)]
pub struct OracleGauge {
    pub value: f64,
    pub reduced_ladder: bool,
}

/// Evaluate -log f(u v(phi)) / u on the ladder u in {20, 30, 40} and
/// extrapolate linearly in 1/u to the limit; returns the true gauge
/// m(phi, t) up to the stated finite-u bias.
pub fn gauge_oracle(
    spec: &CopulaSpec,
    t: f64,
    phi: f64,
    norm: NormKind,
) -> Result<OracleGauge> {
    gauge_oracle_with_ladder(spec, t, phi, norm, &[20.0, 30.0, 40.0])
}

pub fn gauge_oracle_with_ladder(
    spec: &CopulaSpec,
    t: f64,
    phi: f64,
    norm: NormKind,
    ladder: &[f64],
) -> Result<OracleGauge> {
    let v = unit_point(phi, norm);
    let mut scale = 1.0;
    let mut reduced = false;
    for _attempt in 0..4 {
        let mut xs = Vec::with_capacity(ladder.len());
        let mut ys = Vec::with_capacity(ladder.len());
        let mut ok = true;
        for &u0 in ladder {
            let u = u0 * scale;
            let ld = joint_log_density(spec, t, (u * v.0, u * v.1))?;
            if !ld.is_finite() {
                ok = false;
                break;
            }
            xs.push(1.0 / u);
            ys.push(-ld / u);
        }
        if ok {
            let value = linear_intercept(&xs, &ys);
            if value.is_finite() && value > 0.0 {
                return Ok(OracleGauge {
                    value,
                    reduced_ladder: reduced,
                });
            }
        }
        scale *= 0.5;
        reduced = true;
    }
    Err(Error::domain(format!(
        "gauge oracle failed at phi={phi}, t={t}: density not representable"
    )))
}

/// Least-squares intercept of y against x (extrapolation to x = 0).
fn linear_intercept(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    my - slope * mx
}
