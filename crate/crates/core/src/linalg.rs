//! Small dense linear algebra for the regression and variance code.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::num::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: F) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-F::one()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(F::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> F {
        let mut worst = F::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        self.add(&t).scale(F::of(0.5))
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > F::zero()) || !d.is_finite() {
                return Err(Error::Numerical(format!("matrix is not positive definite (pivot {j})")));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Solves `A x = b` for symmetric positive definite `A`.
    pub fn solve_spd(&self, b: &[F]) -> Result<Vec<F>> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - l[(i, k)] * y[k];
            }
            y[i] = y[i] / l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] = y[i] - l[(k, i)] * y[k];
            }
            y[i] = y[i] / l[(i, i)];
        }
        Ok(y)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.data.iter().fold(F::zero(), |m, x| m.max(x.abs()));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            if !(a[(pivot, col)].abs() > F::epsilon() * scale * F::of_usize(n)) {
                return Err(Error::Numerical(format!("matrix is singular (column {col})")));
            }
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a[(col, j)], a[(pivot, j)]);
                    a[(col, j)] = y;
                    a[(pivot, j)] = x;
                    let (x, y) = (inv[(col, j)], inv[(pivot, j)]);
                    inv[(col, j)] = y;
                    inv[(pivot, j)] = x;
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] / p;
                inv[(col, j)] = inv[(col, j)] / p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == F::zero() {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] - f * a[(col, j)];
                    inv[(i, j)] = inv[(i, j)] - f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}
