//! Dense real matrix kernels shared by every other module.
//!
//! The matrix type is a plain row-major `Vec<f64>` wrapper. Everything here is
//! desk scale (n up to ~2,000), so the kernels favour determinism and clarity
//! over blocking or SIMD: fixed summation order, no threading, no
//! architecture-dependent shortcuts. All operations are pure; values are
//! immutable after construction and safe to share across threads for reading.

use crate::error::{Error, Result};
use std::fmt;

/// Dense real matrix, row-major storage.
///
/// Invariants: `rows >= 1`, `cols >= 1`, `data.len() == rows * cols`, all
/// entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating the invariants.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite entry {bad}")));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Convenience constructor from nested rows (used heavily in tests).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("no rows".into()));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |A_ij - A_ji| over all pairs; 0 for a 1x1 matrix.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol
    }

    /// sqrt of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum Euclidean row norm (the two-to-infinity norm).
    pub fn two_inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        crate::svd::singular_values(self).first().copied().unwrap_or(0.0)
    }

    /// Entrywise power A^{.s}. Fractional exponents require nonnegative
    /// entries; negative entries with non-integer `s` are a domain error.
    pub fn hadamard_pow(&self, s: f64) -> Result<Matrix> {
        let fractional = s.fract() != 0.0;
        let mut data = Vec::with_capacity(self.data.len());
        for &v in &self.data {
            if fractional && v < 0.0 {
                return Err(Error::Domain(format!(
                    "entrywise power {s} of negative entry {v}"
                )));
            }
            data.push(v.powf(s));
        }
        Matrix::new(self.rows, self.cols, data)
    }

    /// Entrywise product A o B.
    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, |a, b| a * b)
    }

    /// -1/2 H A H for the centering matrix H = I - (1/n) 1 1^T.
    ///
    /// The result has all row and column sums equal to zero. Expanding the
    /// conjugation gives B_ij = -1/2 (A_ij - rbar_i - cbar_j + gbar), which is
    /// what is computed here; it avoids forming H and two matrix products.
    pub fn double_center(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "double centering needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let tol = 1e-10 * self.max_abs().max(1.0);
        if self.asymmetry() > tol {
            return Err(Error::Validation(format!(
                "matrix is asymmetric beyond tolerance: max |A_ij - A_ji| = {:e}",
                self.asymmetry()
            )));
        }
        let n = self.rows;
        let nf = n as f64;
        let mut row_mean = vec![0.0; n];
        let mut col_mean = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                row_mean[i] += self.get(i, j);
                col_mean[j] += self.get(i, j);
            }
        }
        let grand: f64 = row_mean.iter().sum::<f64>() / (nf * nf);
        for v in &mut row_mean {
            *v /= nf;
        }
        for v in &mut col_mean {
            *v /= nf;
        }
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, -0.5 * (self.get(i, j) - row_mean[i] - col_mean[j] + grand));
            }
        }
        Ok(out)
    }
}

// Serialized as an array of row arrays; deserialization revalidates the
// invariants through Matrix::from_rows.
impl serde::Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>12.6}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, seeded_rng};
    use rand::Rng;

    #[test]
    fn rejects_bad_shapes_and_nonfinite() {
        assert!(Matrix::new(0, 1, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn double_center_two_by_two() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let b = a.double_center().unwrap();
        let expect = [[0.25, -0.25], [-0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert_close(b.get(i, j), expect[i][j], 1e-15);
            }
        }
    }

    #[test]
    fn double_center_single_entry() {
        let a = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let b = a.double_center().unwrap();
        assert_eq!(b.get(0, 0), 0.0);
    }

    #[test]
    fn double_center_all_ones_is_zero() {
        let a = Matrix::new(3, 3, vec![1.0; 9]).unwrap();
        let b = a.double_center().unwrap();
        assert!(b.max_abs() <= 1e-15);
    }

    #[test]
    fn double_center_rejects_nonsquare_and_asymmetric() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(a.double_center(), Err(Error::Dimension(_))));
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(a.double_center(), Err(Error::Validation(_))));
    }

    #[test]
    fn double_center_row_col_sums_vanish() {
        let mut rng = seeded_rng(11);
        for n in [2usize, 5, 9] {
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.random_range(-3.0..3.0);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            let b = a.double_center().unwrap();
            let tol = 1e-10 * n as f64 * a.max_abs();
            for i in 0..n {
                let rs: f64 = b.row(i).iter().sum();
                let cs: f64 = b.column(i).iter().sum();
                assert!(rs.abs() <= tol, "row sum {rs}");
                assert!(cs.abs() <= tol, "col sum {cs}");
            }
            assert!(b.is_symmetric(1e-12 * a.max_abs().max(1.0)));
        }
    }

    #[test]
    fn hadamard_pow_examples() {
        let a = Matrix::from_rows(&[vec![4.0, 9.0], vec![1.0, 0.0]]).unwrap();
        let sq = a.hadamard_pow(2.0).unwrap();
        assert_eq!(sq.as_slice(), &[16.0, 81.0, 1.0, 0.0]);

        let a = Matrix::from_rows(&[vec![4.0, 9.0], vec![1.0, 16.0]]).unwrap();
        let rt = a.hadamard_pow(0.5).unwrap();
        assert_eq!(rt.as_slice(), &[2.0, 3.0, 1.0, 4.0]);

        let a = Matrix::from_rows(&[vec![-2.0, 3.0], vec![0.5, -7.0]]).unwrap();
        assert_eq!(a.hadamard_pow(1.0).unwrap(), a);
        assert!(matches!(a.hadamard_pow(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn norm_examples() {
        let a = Matrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap();
        assert_close(a.two_inf_norm(), 5.0, 1e-15);
        assert_close(a.frobenius_norm(), 26f64.sqrt(), 1e-15);
        assert_close(Matrix::identity(4).frobenius_norm(), 2.0, 1e-15);

        let d = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]).unwrap();
        assert_close(d.spectral_norm(), 5.0, 1e-12);
        assert_eq!(Matrix::zeros(3, 2).spectral_norm(), 0.0);
        let p = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_close(p.spectral_norm(), 1.0, 1e-12);
    }

    #[test]
    fn norm_chain_holds_on_random_matrices() {
        let mut rng = seeded_rng(5);
        for _ in 0..1000 {
            let r = rng.random_range(1..7usize);
            let c = rng.random_range(1..7usize);
            let data: Vec<f64> = (0..r * c).map(|_| rng.random_range(-10.0..10.0)).collect();
            let a = Matrix::new(r, c, data).unwrap();
            let (ti, sp, fr) = (a.two_inf_norm(), a.spectral_norm(), a.frobenius_norm());
            assert!(ti <= sp + 1e-9 * fr.max(1.0), "two_inf {ti} > spectral {sp}");
            assert!(sp <= fr + 1e-9 * fr.max(1.0), "spectral {sp} > frobenius {fr}");
        }
    }
}
