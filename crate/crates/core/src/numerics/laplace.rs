//! Standard Laplace distribution: the reference marginal scale for the
//! dependence model.

use crate::error::{Error, Result};

pub fn laplace_pdf(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

pub fn ln_laplace_pdf(x: f64) -> f64 {
    -std::f64::consts::LN_2 - x.abs()
}

/// F(x) = e^x/2 for x < 0, 1 − e^{−x}/2 otherwise.
pub fn laplace_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

/// Survivor 1 − F(x), exact in both tails.
pub fn laplace_survival(x: f64) -> f64 {
    if x < 0.0 {
        1.0 - 0.5 * x.exp()
    } else {
        0.5 * (-x).exp()
    }
}

/// Quantile: log(2u) for u < 1/2, −log(2(1−u)) otherwise. Errors at 0 and 1.
pub fn laplace_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "laplace quantile probability {u} outside (0,1)"
        )));
    }
    Ok(if u < 0.5 {
        (2.0 * u).ln()
    } else {
        -(2.0 * (1.0 - u)).ln()
    })
}

/// Quantile parametrized by the survivor probability; avoids the 1 − u
/// cancellation when mapping far upper tails onto the Laplace scale.
pub fn laplace_quantile_from_survival(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!(
            "laplace survivor probability {s} outside (0,1)"
        )));
    }
    Ok(if s < 0.5 {
        -(2.0 * s).ln()
    } else {
        (2.0 * (1.0 - s)).ln()
    })
}
