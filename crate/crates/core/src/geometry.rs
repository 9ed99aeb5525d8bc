//! Norms, angular-radial decomposition, boundary curves, per-quadrant tail
//! dependence coefficients, and return-level curves.

use crate::error::{Error, Result};
use crate::splines::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub fn norm(&self, x: (f64, f64)) -> f64 {
        match self {
            NormKind::L1 => x.0.abs() + x.1.abs(),
            NormKind::L2 => x.0.hypot(x.1),
            NormKind::Linf => x.0.abs().max(x.1.abs()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::Linf => "linf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "loo" | "lmax" => Ok(NormKind::Linf),
            other => Err(Error::config(format!("unknown norm '{other}'"))),
        }
    }
}

/// Angular-radial coordinates of one observation: radius under the chosen
/// norm, polar angle in [0, 2pi), and its time index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub phi: f64,
    pub t: f64,
}

/// Wrap atan2 output into [0, 2pi).
pub fn wrap_angle(phi: f64) -> f64 {
    let mut p = phi % TWO_PI;
    if p < 0.0 {
        p += TWO_PI;
    }
    if p >= TWO_PI {
        p = 0.0;
    }
    p
}

/// Radius (chosen norm) and polar angle of a nonzero point.
pub fn to_polar(x: (f64, f64), norm: NormKind) -> Result<(f64, f64)> {
    if !x.0.is_finite() || !x.1.is_finite() {
        return Err(Error::domain("polar decomposition of nonfinite point"));
    }
    if x.0 == 0.0 && x.1 == 0.0 {
        return Err(Error::domain("polar decomposition undefined at the origin"));
    }
    Ok((norm.norm(x), wrap_angle(x.1.atan2(x.0))))
}

/// The point of the norm's unit sphere at polar angle phi:
/// (cos phi, sin phi) / ||(cos phi, sin phi)||.
pub fn unit_point(phi: f64, norm: NormKind) -> (f64, f64) {
    let c = phi.cos();
    let s = phi.sin();
    let n = norm.norm((c, s));
    (c / n, s / n)
}

/// Polygonal approximation of a star-shaped boundary at one time index:
/// points v(phi)/m(phi, t), radii their Euclidean lengths.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub t: f64,
    pub phi_grid: Vec<f64>,
    pub radii: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

/// Default angular grid: n equally spaced angles starting at 0.
pub fn default_phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect()
}

/// Build a boundary curve from any gauge evaluator m(phi) > 0 at fixed t.
pub fn boundary_curve<F>(mut gauge: F, t: f64, phi_grid: &[f64], norm: NormKind) -> Result<BoundaryCurve>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut radii = Vec::with_capacity(phi_grid.len());
    let mut points = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let m = gauge(phi)?;
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::model(format!(
                "gauge must be positive, got {m} at phi={phi}, t={t}"
            )));
        }
        let v = unit_point(phi, norm);
        let p = (v.0 / m, v.1 / m);
        points.push(p);
        radii.push(p.0.hypot(p.1));
    }
    Ok(BoundaryCurve {
        t,
        phi_grid: phi_grid.to_vec(),
        radii,
        points,
    })
}

/// Radial level r^p(phi, t) of the fitted model: the stage-1 threshold at
/// p = tau, otherwise the truncated-gamma conditional quantile above it at
/// level (p - tau)/(1 - tau).
pub fn radial_level(
    quantile_fit: &crate::quantile_fit::QuantileGamFit,
    gauge_fit: &crate::gauge_fit::GaugeGamFit,
    phi: f64,
    t: f64,
    p: f64,
) -> Result<f64> {
    let tau = quantile_fit.tau;
    if (gauge_fit.tau - tau).abs() > 1e-12 {
        return Err(Error::model(
            "quantile and gauge fits disagree on the threshold level",
        ));
    }
    if !(p >= tau) || !(p < 1.0) {
        return Err(Error::domain(format!(
            "return level probability {p} below the modeled region (tau = {tau})"
        )));
    }
    let thresh = crate::quantile_fit::predict_quantile(quantile_fit, phi, t)?;
    if p == tau {
        return Ok(thresh);
    }
    let rate = crate::gauge_fit::predict_gauge(gauge_fit, phi, t)?;
    let q_c = (p - tau) / (1.0 - tau);
    crate::gauge_fit::trunc_gamma_conditional_quantile(q_c, rate, thresh, gauge_fit.shape)
}

/// The closed curve with exceedance probability 1 - p in every angular
/// direction: points v(phi) r^p(phi, t).
pub fn return_level_curve(
    quantile_fit: &crate::quantile_fit::QuantileGamFit,
    gauge_fit: &crate::gauge_fit::GaugeGamFit,
    t: f64,
    p: f64,
    phi_grid: &[f64],
    norm: NormKind,
) -> Result<BoundaryCurve> {
    let mut radii = Vec::with_capacity(phi_grid.len());
    let mut points = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let r = radial_level(quantile_fit, gauge_fit, phi, t, p)?;
        let v = unit_point(phi, norm);
        let pt = (v.0 * r, v.1 * r);
        points.push(pt);
        radii.push(pt.0.hypot(pt.1));
    }
    Ok(BoundaryCurve {
        t,
        phi_grid: phi_grid.to_vec(),
        radii,
        points,
    })
}

/// A per-quadrant tail dependence coefficient extracted from a boundary
/// curve, clamped into (0, 1] with a flag when clamping fired.
#[derive(Debug, Clone, Copy)]
pub struct EtaEstimate {
    pub value: f64,
    pub clamped: bool,
}

/// eta for sign pattern `quadrant`: the largest s such that the square
/// [s, inf)^2 (reflected into the quadrant) touches the curve.
pub fn eta_from_boundary(curve: &BoundaryCurve, quadrant: (i8, i8)) -> Result<EtaEstimate> {
    if !(quadrant.0 == 1 || quadrant.0 == -1) || !(quadrant.1 == 1 || quadrant.1 == -1) {
        return Err(Error::domain("quadrant signs must be +1 or -1"));
    }
    let mut best = f64::NEG_INFINITY;
    let mut seen = false;
    for &(x, y) in &curve.points {
        let ox = x * quadrant.0 as f64;
        let oy = y * quadrant.1 as f64;
        if ox > 0.0 && oy > 0.0 {
            seen = true;
            best = best.max(ox.min(oy));
        }
    }
    if !seen {
        return Err(Error::model(
            "no boundary points in the requested quadrant; refine the angle grid",
        ));
    }
    let clamped = best > 1.0 || best <= 0.0;
    Ok(EtaEstimate {
        value: best.clamp(f64::MIN_POSITIVE, 1.0),
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_of_three_four_five() {
        let (r, phi) = to_polar((3.0, 4.0), NormKind::L2).unwrap();
        assert!((r - 5.0).abs() < 1e-12);
        assert!((phi - 0.927_295_218_001_612_2).abs() < 1e-9);
        let (r, phi) = to_polar((3.0, 4.0), NormKind::L1).unwrap();
        assert!((r - 7.0).abs() < 1e-12);
        assert!((phi - 0.927_295_218_001_612_2).abs() < 1e-9);
    }

    #[test]
    fn polar_negative_axis() {
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            let (r, phi) = to_polar((-1.0, 0.0), norm).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
            assert!((phi - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn origin_rejected() {
        assert!(to_polar((0.0, 0.0), NormKind::L2).is_err());
    }

    #[test]
    fn unit_points_on_each_ball() {
        let p = unit_point(std::f64::consts::FRAC_PI_4, NormKind::Linf);
        assert!((p.0 - 1.0).abs() < 1e-12 && (p.1 - 1.0).abs() < 1e-12);
        let p = unit_point(std::f64::consts::FRAC_PI_4, NormKind::L1);
        assert!((p.0 - 0.5).abs() < 1e-12 && (p.1 - 0.5).abs() < 1e-12);
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            let p = unit_point(0.0, norm);
            assert!((p.0 - 1.0).abs() < 1e-12 && p.1.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_point_polar_round_trip() {
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            for i in 0..720 {
                let phi = TWO_PI * i as f64 / 720.0;
                let c = 2.7;
                let v = unit_point(phi, norm);
                let (r, back) = to_polar((c * v.0, c * v.1), norm).unwrap();
                assert!((r - c).abs() < 1e-10, "norm {:?} phi {phi}", norm);
                let dphi = (back - phi).abs();
                let dphi = dphi.min(TWO_PI - dphi);
                assert!(dphi < 1e-10, "norm {:?} phi {phi} -> {back}", norm);
            }
        }
    }

    #[test]
    fn unit_gauge_gives_unit_circle() {
        let grid = default_phi_grid(360);
        let curve = boundary_curve(|_| Ok(1.0), 1.0, &grid, NormKind::L2).unwrap();
        for r in &curve.radii {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn independence_gauge_gives_diamond() {
        // m(phi) = |cos| + |sin| with the L2 norm traces the L1 diamond
        let grid = default_phi_grid(720);
        let curve = boundary_curve(
            |phi| Ok(phi.cos().abs() + phi.sin().abs()),
            1.0,
            &grid,
            NormKind::L2,
        )
        .unwrap();
        for (&(x, y), &phi) in curve.points.iter().zip(&curve.phi_grid) {
            assert!((x.abs() + y.abs() - 1.0).abs() < 1e-10, "phi {phi}");
        }
        // vertices present
        assert!((curve.points[0].0 - 1.0).abs() < 1e-12);
        let eta = eta_from_boundary(&curve, (1, 1)).unwrap();
        assert!((eta.value - 0.5).abs() < 1e-4);
        assert!(!eta.clamped);
    }

    #[test]
    fn eta_detects_dependence_corner() {
        // curve passing through (1,1) has eta = 1
        let grid = default_phi_grid(720); // pi/4 = 2*pi*90/720 lies on the grid
        let curve = boundary_curve(
            |phi| {
                // gauge of perfect dependence boundary max(|x|,|y|) under L2
                let v = unit_point(phi, NormKind::L2);
                Ok(v.0.abs().max(v.1.abs()))
            },
            0.0,
            &grid,
            NormKind::L2,
        )
        .unwrap();
        let eta = eta_from_boundary(&curve, (1, 1)).unwrap();
        assert!(eta.value > 0.999, "eta {}", eta.value);
    }

    #[test]
    fn eta_missing_quadrant_errors() {
        let grid: Vec<f64> = (0..10).map(|i| 0.01 + i as f64 * 0.01).collect();
        let curve = boundary_curve(|_| Ok(1.0), 0.0, &grid, NormKind::L2).unwrap();
        assert!(eta_from_boundary(&curve, (-1, -1)).is_err());
    }

    #[test]
    fn norm_parse_round_trip() {
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            assert_eq!(NormKind::parse(norm.name()).unwrap(), norm);
        }
        assert!(NormKind::parse("l3").is_err());
    }
}
