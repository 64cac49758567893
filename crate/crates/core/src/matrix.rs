//! Small dense matrices over a [`Scalar`].
//!
//! The cell-level objects (extension matrices, energy blocks) are at most a
//! few dozen entries, so a plain row-major `Vec` is all that is needed.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let cur = std::mem::replace(&mut out[(i, j)], S::zero());
                    out[(i, j)] = cur + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    pub fn scale(&self, s: &S) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    /// `f · M · g`.
    pub fn bilinear(&self, f: &[S], g: &[S]) -> S {
        dot(f, &self.mul_vec(g))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    /// Determinant by Gaussian elimination (exact for rationals).
    pub fn determinant(&self) -> S {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero());
            let Some(p) = pivot else {
                return S::zero();
            };
            if p != col {
                for j in 0..n {
                    a.data.swap(p * n + j, col * n + j);
                }
                det = -det;
            }
            let pv = a[(col, col)].clone();
            det = det * pv.clone();
            for r in col + 1..n {
                let factor = a[(r, col)].clone() / pv.clone();
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)].clone() * factor.clone();
                    let cur = std::mem::replace(&mut a[(r, j)], S::zero());
                    a[(r, j)] = cur - v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix<S>> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if p != col {
                for j in 0..n {
                    a.data.swap(p * n + j, col * n + j);
                    inv.data.swap(p * n + j, col * n + j);
                }
            }
            let pv = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() / pv.clone();
                inv[(col, j)] = inv[(col, j)].clone() / pv.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    let av = a[(col, j)].clone() * f.clone();
                    let iv = inv[(col, j)].clone() * f.clone();
                    a[(r, j)] = a[(r, j)].clone() - av;
                    inv[(r, j)] = inv[(r, j)].clone() - iv;
                }
            }
        }
        Some(inv)
    }

    /// Coefficients `c_0..c_n` of `det(x I - M) = x^n + c_1 x^{n-1} + ... + c_n`
    /// (Faddeev-LeVerrier), `c_0 = 1`.
    pub fn characteristic_polynomial(&self) -> Vec<S> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![S::one()];
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{k-1} I
            let mut next = self.mul(&m);
            for i in 0..n {
                next[(i, i)] = next[(i, i)].clone() + coeffs[k - 1].clone();
            }
            let c = -(self.mul(&next).trace()) / S::from_i64(k as i64);
            coeffs.push(c);
            m = next;
        }
        coeffs
    }

    /// Positive semidefiniteness by symmetric Gaussian elimination; exact for
    /// rationals. A zero pivot requires the rest of its row to vanish.
    pub fn is_positive_semidefinite(&self) -> bool {
        assert!(self.is_symmetric(), "matrix must be symmetric");
        let n = self.rows;
        let mut a = self.clone();
        for k in 0..n {
            let pv = a[(k, k)].clone();
            if pv < S::zero() {
                return false;
            }
            if pv.is_zero() {
                if (k + 1..n).any(|j| !a[(k, j)].is_zero()) {
                    return false;
                }
                continue;
            }
            for i in k + 1..n {
                let f = a[(i, k)].clone() / pv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[(k, j)].clone() * f.clone();
                    a[(i, j)] = a[(i, j)].clone() - v;
                }
            }
        }
        true
    }
}

impl Matrix<Rational> {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64())
    }
}

impl Matrix<f64> {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[S]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(a.determinant(), int(18));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(3));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn charpoly_of_diagonal() {
        let a = Matrix::from_rows(vec![
            vec![int(1), int(0)],
            vec![int(0), rat(3, 5)],
        ]);
        // (x-1)(x-3/5) = x^2 - 8/5 x + 3/5
        assert_eq!(a.characteristic_polynomial(), vec![int(1), rat(-8, 5), rat(3, 5)]);
    }

    #[test]
    fn psd_detection() {
        assert!(m(&[&[2, -1], &[-1, 2]]).is_positive_semidefinite());
        assert!(m(&[&[1, -1], &[-1, 1]]).is_positive_semidefinite());
        assert!(!m(&[&[1, 2], &[2, 1]]).is_positive_semidefinite());
        assert!(!m(&[&[0, 1], &[1, 0]]).is_positive_semidefinite());
        assert!(m(&[&[0, 0], &[0, 3]]).is_positive_semidefinite());
    }
}
