//! Cubic and cyclic-cubic regression spline bases, tensor products, and
//! second-derivative penalty matrices.
//!
//! Both univariate bases are value-parametrized: coefficient j is the value
//! of the spline at knot j, with knot second derivatives recovered from the
//! banded continuity system. The curvature penalty then has the closed form
//! D' B^{-1} D, whose null space contains constants (and linear functions
//! for the non-cyclic basis). The time axis is rescaled to [0,1] internally
//! so penalties and optimizer conditioning do not depend on the horizon;
//! knot values are reported on the original index scale.

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnotKind {
    Time,
    Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    pub kind: KnotKind,
    pub values: Vec<f64>,
}

impl KnotGrid {
    fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::config("knot grid needs at least two knots"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("knot grid must be strictly ascending"));
        }
        Ok(())
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Equally spaced time knots over {1, ..., t_len}:
/// k_j = 1 + (t_len − 1)(j − 1)/(kappa_t − 1).
pub fn knots_time(t_len: usize, kappa_t: usize) -> Result<KnotGrid> {
    if kappa_t < 3 {
        return Err(Error::config(format!(
            "time basis dimension must be at least 3, got {kappa_t}"
        )));
    }
    if t_len < 2 {
        return Err(Error::domain(format!(
            "time horizon must be at least 2, got {t_len}"
        )));
    }
    let t = t_len as f64;
    let k = kappa_t as f64;
    let values = (1..=kappa_t)
        .map(|j| 1.0 + (t - 1.0) * (j as f64 - 1.0) / (k - 1.0))
        .collect();
    Ok(KnotGrid {
        kind: KnotKind::Time,
        values,
    })
}

/// Equally spaced angular knots over [0, 2pi]:
/// k_j = 2pi (j − 1)/(kappa_phi − 1). The first and last knots are the same
/// point of the circle; the cyclic basis has dimension kappa_phi − 1.
pub fn knots_angle(kappa_phi: usize) -> Result<KnotGrid> {
    if kappa_phi < 4 {
        return Err(Error::config(format!(
            "angle basis dimension must be at least 4, got {kappa_phi}"
        )));
    }
    let k = kappa_phi as f64;
    let values = (1..=kappa_phi)
        .map(|j| TWO_PI * (j as f64 - 1.0) / (k - 1.0))
        .collect();
    Ok(KnotGrid {
        kind: KnotKind::Angle,
        values,
    })
}

/// A basis evaluated on a set of points plus its curvature penalty.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub matrix: Mat,
    pub penalty: Mat,
}

impl BasisEval {
    pub fn n_basis(&self) -> usize {
        self.matrix.cols()
    }
}

/// Cubic regression spline basis (natural boundary second derivatives),
/// coefficient j = spline value at knot j.
#[derive(Debug, Clone)]
pub struct CubicSplineBasis {
    knots: Vec<f64>,      // normalized to [0, 1]
    range: (f64, f64),    // original scale
    second_deriv_map: Mat, // K x K map from values to knot second derivatives
    penalty: Mat,
}

impl CubicSplineBasis {
    pub fn new(grid: &KnotGrid) -> Result<Self> {
        grid.validate()?;
        let k = grid.values.len();
        if k < 3 {
            return Err(Error::config("cubic basis needs at least 3 knots"));
        }
        let lo = grid.first();
        let hi = grid.last();
        let knots: Vec<f64> = grid.values.iter().map(|v| (v - lo) / (hi - lo)).collect();
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();

        // continuity system B delta = D beta over interior knots
        let m = k - 2;
        let mut b = Mat::zeros(m, m);
        let mut d = Mat::zeros(m, k);
        for row in 0..m {
            let i = row + 1; // interior knot index
            b[(row, row)] = (h[i - 1] + h[i]) / 3.0;
            if row > 0 {
                b[(row, row - 1)] = h[i - 1] / 6.0;
            }
            if row + 1 < m {
                b[(row, row + 1)] = h[i] / 6.0;
            }
            d[(row, i - 1)] = 1.0 / h[i - 1];
            d[(row, i)] = -1.0 / h[i - 1] - 1.0 / h[i];
            d[(row, i + 1)] = 1.0 / h[i];
        }
        let f_interior = b.solve(&d)?; // m x k
        let mut f_full = Mat::zeros(k, k);
        for row in 0..m {
            f_full.row_mut(row + 1).copy_from_slice(f_interior.row(row));
        }
        let penalty = d.transpose().matmul(&f_interior).symmetrized();
        Ok(CubicSplineBasis {
            knots,
            range: (lo, hi),
            second_deriv_map: f_full,
            penalty,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len()
    }

    pub fn penalty(&self) -> &Mat {
        &self.penalty
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Basis row at a single point of the original axis. No extrapolation.
    pub fn row(&self, x: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.range;
        let span = hi - lo;
        if !x.is_finite() || x < lo - 1e-9 * span || x > hi + 1e-9 * span {
            return Err(Error::domain(format!(
                "evaluation point {x} outside knot range [{lo}, {hi}]"
            )));
        }
        let u = ((x - lo) / span).clamp(0.0, 1.0);
        let k = self.knots.len();
        let j = interval_index(&self.knots, u, k - 2);
        let h = self.knots[j + 1] - self.knots[j];
        let left = self.knots[j + 1] - u;
        let right = u - self.knots[j];
        let a_minus = left / h;
        let a_plus = right / h;
        let c_minus = (left * left * left / h - h * left) / 6.0;
        let c_plus = (right * right * right / h - h * right) / 6.0;
        let mut row = vec![0.0; k];
        row[j] += a_minus;
        row[j + 1] += a_plus;
        let fj = self.second_deriv_map.row(j);
        let fj1 = self.second_deriv_map.row(j + 1);
        for c in 0..k {
            row[c] += c_minus * fj[c] + c_plus * fj1[c];
        }
        Ok(row)
    }

    pub fn eval(&self, xs: &[f64]) -> Result<BasisEval> {
        let rows: Result<Vec<Vec<f64>>> = xs.iter().map(|&x| self.row(x)).collect();
        Ok(BasisEval {
            matrix: Mat::from_rows(&rows?)?,
            penalty: self.penalty.clone(),
        })
    }
}

/// Periodic cubic spline basis on [0, 2pi) with the wrap-around identifying
/// the first and last knots; dimension is one less than the knot count.
#[derive(Debug, Clone)]
pub struct CyclicSplineBasis {
    knots: Vec<f64>, // all knots including the 2pi endpoint
    second_deriv_map: Mat, // m x m cyclic map
    penalty: Mat,
}

impl CyclicSplineBasis {
    pub fn new(grid: &KnotGrid) -> Result<Self> {
        grid.validate()?;
        let k = grid.values.len();
        if k < 4 {
            return Err(Error::config("cyclic basis needs at least 4 knots"));
        }
        if grid.first().abs() > 1e-12 || (grid.last() - TWO_PI).abs() > 1e-9 {
            return Err(Error::config(
                "cyclic basis knots must start at 0 and end at 2pi",
            ));
        }
        let knots = grid.values.clone();
        let m = k - 1;
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut b = Mat::zeros(m, m);
        let mut d = Mat::zeros(m, m);
        for i in 0..m {
            let prev = (i + m - 1) % m;
            let next = (i + 1) % m;
            let h_prev = h[prev];
            let h_i = h[i];
            b[(i, prev)] += h_prev / 6.0;
            b[(i, i)] += (h_prev + h_i) / 3.0;
            b[(i, next)] += h_i / 6.0;
            d[(i, prev)] += 1.0 / h_prev;
            d[(i, i)] += -1.0 / h_prev - 1.0 / h_i;
            d[(i, next)] += 1.0 / h_i;
        }
        let f = b.solve(&d)?;
        let penalty = d.transpose().matmul(&f).symmetrized();
        Ok(CyclicSplineBasis {
            knots,
            second_deriv_map: f,
            penalty,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn penalty(&self) -> &Mat {
        &self.penalty
    }

    pub fn row(&self, phi: f64) -> Result<Vec<f64>> {
        if !phi.is_finite() || phi < -1e-12 || phi >= TWO_PI + 1e-12 {
            return Err(Error::domain(format!(
                "angle {phi} outside [0, 2pi)"
            )));
        }
        let p = if phi >= TWO_PI || phi < 0.0 { 0.0 } else { phi };
        let m = self.n_basis();
        let j = interval_index(&self.knots, p, m - 1).min(m - 1);
        let h = self.knots[j + 1] - self.knots[j];
        let left = self.knots[j + 1] - p;
        let right = p - self.knots[j];
        let a_minus = left / h;
        let a_plus = right / h;
        let c_minus = (left * left * left / h - h * left) / 6.0;
        let c_plus = (right * right * right / h - h * right) / 6.0;
        let col_l = j % m;
        let col_r = (j + 1) % m;
        let mut row = vec![0.0; m];
        row[col_l] += a_minus;
        row[col_r] += a_plus;
        let fl = self.second_deriv_map.row(col_l);
        let fr = self.second_deriv_map.row(col_r);
        for c in 0..m {
            row[c] += c_minus * fl[c] + c_plus * fr[c];
        }
        Ok(row)
    }

    pub fn eval(&self, phis: &[f64]) -> Result<BasisEval> {
        let rows: Result<Vec<Vec<f64>>> = phis.iter().map(|&p| self.row(p)).collect();
        Ok(BasisEval {
            matrix: Mat::from_rows(&rows?)?,
            penalty: self.penalty.clone(),
        })
    }
}

fn interval_index(knots: &[f64], x: f64, max_interval: usize) -> usize {
    // last interval whose left knot is <= x
    match knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(max_interval),
        Err(i) => i.saturating_sub(1).min(max_interval),
    }
}

/// Row-wise Kronecker tensor of a time basis and an angle basis, with the
/// two marginal curvature penalties expanded to the tensor coefficient
/// space: S_t (x) I and I (x) S_phi.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    pub matrix: Mat,
    pub penalty_time: Mat,
    pub penalty_angle: Mat,
}

pub fn tensor_basis(bt: &BasisEval, bphi: &BasisEval) -> Result<TensorBasis> {
    if bt.matrix.rows() != bphi.matrix.rows() {
        return Err(Error::domain(format!(
            "tensor basis row mismatch: {} vs {}",
            bt.matrix.rows(),
            bphi.matrix.rows()
        )));
    }
    let n = bt.matrix.rows();
    let a = bt.n_basis();
    let b = bphi.n_basis();
    let mut matrix = Mat::zeros(n, a * b);
    for i in 0..n {
        tensor_row_into(bt.matrix.row(i), bphi.matrix.row(i), matrix.row_mut(i));
    }
    let penalty_time = bt.penalty.kron(&Mat::identity(b));
    let penalty_angle = Mat::identity(a).kron(&bphi.penalty);
    Ok(TensorBasis {
        matrix,
        penalty_time,
        penalty_angle,
    })
}

pub fn tensor_row_into(trow: &[f64], prow: &[f64], out: &mut [f64]) {
    let b = prow.len();
    for (i, &tv) in trow.iter().enumerate() {
        let chunk = &mut out[i * b..(i + 1) * b];
        if tv == 0.0 {
            chunk.fill(0.0);
        } else {
            for (o, &pv) in chunk.iter_mut().zip(prow) {
                *o = tv * pv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::quad_form;

    #[test]
    fn time_knot_formula() {
        let g = knots_time(25_000, 10).unwrap();
        assert_eq!(g.values.len(), 10);
        assert!((g.values[0] - 1.0).abs() < 1e-12);
        assert!((g.values[9] - 25_000.0).abs() < 1e-9);
        assert!((g.values[1] - (1.0 + 24_999.0 / 9.0)).abs() < 1e-9);

        let g = knots_time(2, 3).unwrap();
        assert_eq!(g.values, vec![1.0, 1.5, 2.0]);

        let g = knots_time(101, 5).unwrap();
        assert_eq!(g.values, vec![1.0, 26.0, 51.0, 76.0, 101.0]);

        assert!(knots_time(100, 2).is_err());
        assert!(knots_time(1, 5).is_err());
    }

    #[test]
    fn angle_knot_formula() {
        let g = knots_angle(17).unwrap();
        assert_eq!(g.values.len(), 17);
        assert!(g.values[0].abs() < 1e-15);
        assert!((g.values[8] - std::f64::consts::PI).abs() < 1e-12);
        assert!((g.values[16] - TWO_PI).abs() < 1e-12);

        // kappa = 9 hits the axes and principal diagonals
        let g = knots_angle(9).unwrap();
        for (j, mult) in g.values.iter().zip(0..9) {
            assert!((j - mult as f64 * std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        }

        let g = knots_angle(5).unwrap();
        for (j, mult) in g.values.iter().zip(0..5) {
            assert!((j - mult as f64 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }

        assert!(knots_angle(3).is_err());
    }

    #[test]
    fn cubic_penalty_annihilates_constants_and_linears() {
        let grid = knots_time(1000, 8).unwrap();
        let basis = CubicSplineBasis::new(&grid).unwrap();
        let k = basis.n_basis();
        let ones = vec![1.0; k];
        assert!(quad_form(basis.penalty(), &ones).abs() < 1e-10);
        // linear in the original axis
        let lin: Vec<f64> = grid.values.iter().map(|v| 0.5 + 2.0 * v / 1000.0).collect();
        let scale = quad_form(basis.penalty(), &lin).abs();
        assert!(scale < 1e-9, "linear penalty {scale}");
    }

    #[test]
    fn cubic_interpolates_knot_values() {
        // coefficient j is the value at knot j; reconstruction at the knots
        // is exact for any target, here f(x) = x^2 on [0, 1] with 10 knots
        let grid = KnotGrid {
            kind: KnotKind::Time,
            values: (0..10).map(|j| j as f64 / 9.0).collect(),
        };
        let basis = CubicSplineBasis::new(&grid).unwrap();
        let coefs: Vec<f64> = grid.values.iter().map(|v| v * v).collect();
        for (j, &x) in grid.values.iter().enumerate() {
            let row = basis.row(x).unwrap();
            let fit: f64 = row.iter().zip(&coefs).map(|(r, c)| r * c).sum();
            assert!(
                (fit - coefs[j]).abs() <= 1e-6,
                "knot {j}: {fit} vs {}",
                coefs[j]
            );
        }
    }

    #[test]
    fn cubic_rejects_extrapolation() {
        let grid = knots_time(100, 5).unwrap();
        let basis = CubicSplineBasis::new(&grid).unwrap();
        assert!(basis.row(0.5).is_err());
        assert!(basis.row(100.5).is_err());
        assert!(basis.row(f64::NAN).is_err());
    }

    #[test]
    fn cyclic_is_periodic_for_any_coefficients() {
        let grid = knots_angle(17).unwrap();
        let basis = CyclicSplineBasis::new(&grid).unwrap();
        let m = basis.n_basis();
        let coefs: Vec<f64> = (0..m).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let at0: f64 = basis
            .row(0.0)
            .unwrap()
            .iter()
            .zip(&coefs)
            .map(|(r, c)| r * c)
            .sum();
        let near2pi: f64 = basis
            .row(TWO_PI - 1e-12)
            .unwrap()
            .iter()
            .zip(&coefs)
            .map(|(r, c)| r * c)
            .sum();
        assert!((at0 - near2pi).abs() < 1e-10);
    }

    #[test]
    fn cyclic_constant_zero_penalty() {
        let grid = knots_angle(9).unwrap();
        let basis = CyclicSplineBasis::new(&grid).unwrap();
        let ones = vec![1.0; basis.n_basis()];
        assert!(quad_form(basis.penalty(), &ones).abs() < 1e-10);
    }

    #[test]
    fn cyclic_least_squares_fit_of_cosine() {
        // independent least-squares oracle via normal equations
        let grid = knots_angle(17).unwrap();
        let basis = CyclicSplineBasis::new(&grid).unwrap();
        let m = basis.n_basis();
        let phis: Vec<f64> = (0..200).map(|i| TWO_PI * i as f64 / 200.0).collect();
        let be = basis.eval(&phis).unwrap();
        let y: Vec<f64> = phis.iter().map(|p| p.cos()).collect();
        let bt = be.matrix.transpose();
        let btb = bt.matmul(&be.matrix);
        let bty = bt.mul_vec(&y);
        let rhs = Mat::from_rows(&bty.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
        let coef = btb.solve(&rhs).unwrap();
        let coefs: Vec<f64> = (0..m).map(|i| coef[(i, 0)]).collect();
        let fit = be.matrix.mul_vec(&coefs);
        let max_err = fit
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_err <= 1e-4, "cosine fit max error {max_err}");
    }

    #[test]
    fn tensor_dimensions_and_constant_reproduction() {
        let tg = knots_time(50, 5).unwrap();
        let ag = knots_angle(9).unwrap();
        let tb = CubicSplineBasis::new(&tg).unwrap();
        let ab = CyclicSplineBasis::new(&ag).unwrap();
        let ts: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 * 49.0 / 39.0).collect();
        let ps: Vec<f64> = (0..40).map(|i| TWO_PI * i as f64 / 40.0).collect();
        let bt = tb.eval(&ts).unwrap();
        let bp = ab.eval(&ps).unwrap();
        let tens = tensor_basis(&bt, &bp).unwrap();
        assert_eq!(tens.matrix.cols(), 5 * 8);
        // all-equal coefficients reproduce a constant because both marginal
        // bases reproduce constants with unit row sums
        let fit = tens.matrix.mul_vec(&vec![2.5; 5 * 8]);
        for v in fit {
            assert!((v - 2.5).abs() < 1e-10);
        }
        // both penalties annihilate the constant direction
        let c = vec![1.0; 5 * 8];
        assert!(quad_form(&tens.penalty_time, &c).abs() < 1e-10);
        assert!(quad_form(&tens.penalty_angle, &c).abs() < 1e-10);
    }

    #[test]
    fn tensor_row_mismatch_errors() {
        let tg = knots_time(50, 5).unwrap();
        let ag = knots_angle(9).unwrap();
        let bt = CubicSplineBasis::new(&tg).unwrap().eval(&[1.0, 2.0]).unwrap();
        let bp = CyclicSplineBasis::new(&ag).unwrap().eval(&[0.1]).unwrap();
        assert!(tensor_basis(&bt, &bp).is_err());
    }

    #[test]
    fn tensor_separable_penalized_least_squares() {
        // f(t, phi) = t cos(phi) on [0,1] x [0,2pi); lambda -> 0 oracle
        let tg = KnotGrid {
            kind: KnotKind::Time,
            values: (0..8).map(|j| j as f64 / 7.0).collect(),
        };
        let ag = knots_angle(17).unwrap();
        let tb = CubicSplineBasis::new(&tg).unwrap();
        let ab = CyclicSplineBasis::new(&ag).unwrap();
        let mut ts = Vec::new();
        let mut ps = Vec::new();
        let mut y = Vec::new();
        for i in 0..50 {
            for j in 0..50 {
                let t = i as f64 / 49.0;
                let p = TWO_PI * j as f64 / 50.0;
                ts.push(t);
                ps.push(p);
                y.push(t * p.cos());
            }
        }
        let bt = tb.eval(&ts).unwrap();
        let bp = ab.eval(&ps).unwrap();
        let tens = tensor_basis(&bt, &bp).unwrap();
        let p = tens.matrix.cols();
        let bt_mat = tens.matrix.transpose();
        let mut btb = bt_mat.matmul(&tens.matrix);
        let lam = 1e-9;
        for i in 0..p {
            for j in 0..p {
                btb[(i, j)] += lam * (tens.penalty_time[(i, j)] + tens.penalty_angle[(i, j)]);
            }
        }
        let bty = bt_mat.mul_vec(&y);
        let rhs = Mat::from_rows(&bty.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
        let sol = btb.solve(&rhs).unwrap();
        let coefs: Vec<f64> = (0..p).map(|i| sol[(i, 0)]).collect();
        let fit = tens.matrix.mul_vec(&coefs);
        let max_err = fit
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_err <= 1e-3, "separable fit max error {max_err}");
    }
}
