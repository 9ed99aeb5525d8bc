pub mod density_check;
pub mod diagnose;
pub mod fit;
pub mod predict_boundary;
pub mod risk;
pub mod simstudy;
pub mod simulate;
pub mod simulate_tail;
pub mod standardize;

use geomx::copulas::{CopulaFamily, CopulaSpec};
use geomx::{Error, Result};

/// Parse a copula family name into the study trajectory at horizon T.
pub fn parse_family(name: &str, t_len: usize) -> Result<CopulaSpec> {
    CopulaSpec::new(CopulaFamily::standard(name)?, t_len)
}

/// Parse a comma-separated list of time indices.
pub fn parse_t_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad time index '{v}'")))
        })
        .collect()
}

/// Parse "a,b" into a fixed smoothing pair.
pub fn parse_lambda_pair(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(|p| p.trim()).collect();
    if parts.len() != 2 {
        return Err(Error::config(format!(
            "expected 'lambda_t,lambda_phi', got '{s}'"
        )));
    }
    let a = parts[0]
        .parse()
        .map_err(|_| Error::config(format!("bad smoothing weight '{}'", parts[0])))?;
    let b = parts[1]
        .parse()
        .map_err(|_| Error::config(format!("bad smoothing weight '{}'", parts[1])))?;
    Ok((a, b))
}
