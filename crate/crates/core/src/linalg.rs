//! Minimal dense matrix support for the spline and fitting machinery.
//!
//! The systems in this crate are small (basis dimensions in the tens, tensor
//! coefficient vectors in the low hundreds), so a plain row-major `Vec<f64>`
//! matrix with an LU solver covers everything we need.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nc) {
            return Err(Error::domain("ragged rows in matrix construction"));
        }
        let mut data = Vec::with_capacity(nr * nc);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: nr,
            cols: nc,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            y[i] = dot(self.row(i), x);
        }
        y
    }

    /// y = A' x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_mul_vec dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
        y
    }

    /// C = A B
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// (A + A')/2, for floating-point hygiene on symmetric constructions.
    pub fn symmetrized(&self) -> Mat {
        assert_eq!(self.rows, self.cols);
        let mut out = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        out
    }

    /// Kronecker product A (x) B.
    pub fn kron(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let aij = self[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] = aij * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Solve A X = B for square A via LU with partial pivoting.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::domain("solve requires a square matrix"));
        }
        if rhs.rows != self.rows {
            return Err(Error::domain("solve dimension mismatch"));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[(col, col)].abs();
            for r in col + 1..n {
                let v = lu[(r, col)].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return Err(Error::domain("singular matrix in solve"));
            }
            if pivot != col {
                perm.swap(pivot, col);
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(pivot, j)];
                    lu[(pivot, j)] = tmp;
                }
                for j in 0..x.cols {
                    let tmp = x[(col, j)];
                    x[(col, j)] = x[(pivot, j)];
                    x[(pivot, j)] = tmp;
                }
            }
            let d = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / d;
                lu[(r, col)] = f;
                if f == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(col, j)];
                    x[(r, j)] -= f * v;
                }
            }
        }
        // back substitution
        for j in 0..x.cols {
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Cholesky factor of a symmetric positive definite matrix (lower, row
/// major).
pub struct Cholesky {
    l: Vec<f64>,
    n: usize,
}

impl Cholesky {
    /// Factor A = L L'; None when A is not positive definite.
    pub fn new(a: &Mat) -> Option<Cholesky> {
        let n = a.rows();
        if a.cols() != n {
            return None;
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Cholesky { l, n })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// x' A x for square A.
pub fn quad_form(a: &Mat, x: &[f64]) -> f64 {
    dot(&a.mul_vec(x), x)
}
