//! Shared data containers.

use crate::error::{Error, Result};

/// Which marginal scale a series currently lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginScale {
    /// Raw observations (e.g. log-returns).
    Raw,
    /// Volatility-filtered residuals.
    Filtered,
    /// Standard Laplace margins; the scale the dependence model expects.
    Laplace,
}

/// A time-indexed bivariate series on a declared marginal scale.
#[derive(Debug, Clone)]
pub struct BivariateSeries {
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub scale: MarginScale,
}

impl BivariateSeries {
    pub fn new(t: Vec<f64>, x1: Vec<f64>, x2: Vec<f64>, scale: MarginScale) -> Result<Self> {
        if t.len() != x1.len() || t.len() != x2.len() {
            return Err(Error::data(format!(
                "series length mismatch: t={}, x1={}, x2={}",
                t.len(),
                x1.len(),
                x2.len()
            )));
        }
        Ok(BivariateSeries { t, x1, x2, scale })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.x1[i], self.x2[i])
    }
}
