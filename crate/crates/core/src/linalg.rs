//! Small dense matrix helpers.
//!
//! Every system in the catalog has at most five states and three inputs, so
//! a plain row-major `Vec<f64>` matrix with LU solves and a
//! scaling-and-squaring exponential covers all the linear algebra the
//! toolkit needs.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { nrows, ncols, data }
    }

    pub fn from_vec(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        Matrix { nrows, ncols, data }
    }

    /// Diagonal matrix from its entries.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    /// y = self * x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.ncols {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// y = self^T * x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "tr_mul_vec dimension");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let row = self.row(i);
            for j in 0..self.ncols {
                y[j] += row[j] * x[i];
            }
        }
        y
    }

    pub fn mat_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.ncols, other.nrows, "mat_mul dimension");
        let mut out = Matrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Matrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Solves self * x = b by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(self.nrows, self.ncols, "solve needs a square matrix");
        assert_eq!(b.len(), self.nrows);
        let n = self.nrows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            let mut max = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > max {
                    max = v;
                    piv = r;
                }
            }
            if max < 1e-300 {
                return Err(Error::NonFinite("singular matrix in solve".into()));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in col + 1..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
                x[r] -= factor * x[col];
            }
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for j in row + 1..n {
                acc -= a[row * n + j] * x[j];
            }
            x[row] = acc / a[row * n + row];
        }
        Ok(x)
    }

    /// e^(self * t) by scaling and squaring with a Taylor series summed to
    /// machine precision. Adequate for the small well-scaled matrices used
    /// here.
    pub fn expm(&self, t: f64) -> Matrix {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let norm = self.max_abs() * t.abs();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let b = self.scale(t / f64::powi(2.0, squarings as i32));
        let mut result = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..200 {
            term = term.mat_mul(&b).scale(1.0 / k as f64);
            result = result.add(&term);
            if term.max_abs() <= 1e-18 * result.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mat_mul(&result);
        }
        result
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(xi, yi)| alpha * xi + yi).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|xi| alpha * xi).collect()
}

/// Cross product of two 3-vectors.
pub fn cross3(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), 3);
    debug_assert_eq!(b.len(), 3);
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Skew-symmetric matrix such that skew3(a) * b == a x b.
pub fn skew3(a: &[f64]) -> Matrix {
    Matrix::from_rows(&[
        &[0.0, -a[2], a[1]],
        &[a[2], 0.0, -a[0]],
        &[-a[1], a[0], 0.0],
    ])
}
