//! Small dense linear algebra for Jacobians (dimensions are at most a handful).

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Gram matrix `A Aᵀ`.
    pub fn gram_rows(&self) -> Self {
        self.matmul(&self.transpose())
    }

    /// Determinant by partial-pivot elimination. Panics on non-square input.
    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot =
                (col..n).max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap()).unwrap();
            if a[pivot * n + col] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] = a[i * n + j] - f * a[col * n + j];
                }
            }
        }
        det
    }

    /// Solves `self · x = b`; `None` if the matrix is singular.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot =
                (col..n).max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap()).unwrap();
            if a[pivot * n + col] == T::zero() {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                x.swap(pivot, col);
            }
            let p = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                for j in col..n {
                    a[i * n + j] = a[i * n + j] - f * a[col * n + j];
                }
                x[i] = x[i] - f * x[col];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }

    /// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi rotations).
    pub fn sym_min_eigenvalue(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return T::zero();
        }
        if n == 1 {
            return self.data[0];
        }
        if n == 2 {
            let (a, b, d) = (self.data[0], self.data[1], self.data[3]);
            let half = T::lit(0.5);
            let mean = (a + d) * half;
            let rad = ((a - d) * half).hypot(b);
            return mean - rad;
        }
        let mut a = self.data.clone();
        let total = a.iter().fold(T::zero(), |acc, &v| acc + v * v);
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..n {
                for q in p + 1..n {
                    off = off + a[p * n + q] * a[p * n + q];
                }
            }
            if off <= T::epsilon() * T::epsilon() * total {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(T::infinity(), |m, v| m.min(v))
    }

    /// Smallest singular value, through the eigenvalues of the smaller Gram matrix.
    pub fn min_singular_value(&self) -> T {
        let gram = if self.rows <= self.cols { self.gram_rows() } else { self.transpose().gram_rows() };
        gram.sym_min_eigenvalue().max(T::zero()).sqrt()
    }

    /// Minimal-norm solution of the underdetermined system `self · w = rhs`
    /// (full row rank): `w = Aᵀ (A Aᵀ)⁻¹ rhs`.
    pub fn least_norm_solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        let y = self.gram_rows().solve(rhs)?;
        Some(self.transpose().matvec(&y))
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_struct("Mat").field("rows", &self.rows).field("cols", &self.cols).field("data", &rows).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_solve() {
        let a = Mat::from_row_major(3, 3, vec![2.0f64, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        assert!((a.det() - 18.0).abs() < 1e-12);
        let x = a.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        let sing = Mat::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(sing.det(), 0.0);
        assert!(sing.solve(&[1.0, 1.0]).is_none());
    }

    #[test]
    fn singular_values_of_projection_and_zero_row() {
        let p = Mat::from_row_major(2, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.min_singular_value(), 1.0);
        let z = Mat::from_row_major(1, 2, vec![0.0, 0.0]);
        assert_eq!(z.min_singular_value(), 0.0);
    }

    #[test]
    fn jacobi_matches_closed_form_3x3() {
        // diag(1,2,3) rotated; eigenvalues unchanged
        let c = 0.6f64;
        let s = 0.8f64;
        let r = Mat::from_row_major(3, 3, vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let d = Mat::from_row_major(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.5]);
        let a = r.matmul(&d).matmul(&r.transpose());
        assert!((a.sym_min_eigenvalue() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn least_norm_is_orthogonal_to_kernel() {
        let j = Mat::from_row_major(1, 2, vec![1.0f64, 0.3]);
        let w = j.least_norm_solve(&[-0.5]).unwrap();
        assert!((w[0] + 0.3 * w[1] + 0.5).abs() < 1e-14);
        // kernel direction (-0.3, 1)
        assert!((-0.3 * w[0] + w[1]).abs() < 1e-14);
    }
}
