//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Jacobi is the right tool here: the matrices are small (model count n, desk
//! scale), it is unconditionally stable, and it gives full control over the
//! determinism contracts this crate needs — magnitude ordering with a fixed
//! tie-break, an explicit off-diagonal tolerance, and a reproducible
//! eigenvector sign convention.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

/// Off-diagonal residual target, relative to the Frobenius norm of the input.
const OFF_DIAG_TOL: f64 = 1e-12;

/// Rotation budget: 100 n^2 (a sweep is n(n-1)/2 rotations; quadratic
/// convergence needs ~10 sweeps, so the cap is generous).
fn rotation_cap(n: usize) -> usize {
    100 * n * n
}

/// Counts of positive (`p`) and negative (`q`) eigenvalues in a retained set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are sorted by descending magnitude; at equal magnitude the
/// positive one comes first, then original index. Eigenvector columns follow
/// the same order and are sign-normalized so that the first component larger
/// than `1e-12` in magnitude is positive.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    signature: Signature,
}

impl SpectralDecomposition {
    /// All eigenvalues, magnitude-descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column-orthonormal eigenvector matrix, columns matching `eigenvalues`.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    /// Sign counts over the full spectrum (zero counts as positive).
    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Sign counts over the leading `d` eigenvalues.
    pub fn leading_signature(&self, d: usize) -> Signature {
        signature_of(&self.eigenvalues[..d])
    }

    /// The first `d` eigenvalues.
    pub fn leading_values(&self, d: usize) -> &[f64] {
        &self.eigenvalues[..d]
    }

    /// The n x d matrix of the first `d` eigenvector columns.
    pub fn leading_vectors(&self, d: usize) -> Matrix {
        let n = self.eigenvectors.rows();
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                out.set(i, j, self.eigenvectors.get(i, j));
            }
        }
        out
    }
}

fn signature_of(values: &[f64]) -> Signature {
    let p = values.iter().filter(|&&v| v >= 0.0).count();
    Signature { p, q: values.len() - p }
}

/// Eigendecomposition of a symmetric matrix (symmetric to 1e-10, scaled).
///
/// Fails with a numerical error carrying the residual if the rotation budget
/// is exhausted before the off-diagonal mass drops below tolerance.
pub fn sym_eig(a: &Matrix) -> Result<SpectralDecomposition> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let sym_tol = 1e-10 * a.max_abs().max(1.0);
    if a.asymmetry() > sym_tol {
        return Err(Error::Validation(format!(
            "matrix asymmetric beyond tolerance: {:e}",
            a.asymmetry()
        )));
    }

    let n = a.rows();
    let mut work = a.clone();
    // symmetrize exactly so rotations see a_pq == a_qp
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (work.get(i, j) + work.get(j, i));
            work.set(i, j, s);
            work.set(j, i, s);
        }
    }
    let mut vectors = Matrix::identity(n);
    let norm = work.frobenius_norm();
    let target = OFF_DIAG_TOL * norm;
    let cap = rotation_cap(n);
    let mut rotations = 0usize;

    loop {
        let off = off_diagonal_norm(&work);
        if off <= target || norm == 0.0 {
            break;
        }
        if rotations >= cap {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {cap} rotations; \
                 off-diagonal residual {off:e} (target {target:e})"
            )));
        }
        // one cyclic sweep
        for p in 0..n - 1 {
            for q in p + 1..n {
                if rotations >= cap {
                    break;
                }
                rotations += 1;
                rotate(&mut work, &mut vectors, p, q);
            }
        }
    }

    // Collect, order and sign-normalize.
    let raw: Vec<f64> = (0..n).map(|i| work.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (ai, aj) = (raw[i].abs(), raw[j].abs());
        aj.partial_cmp(&ai)
            .unwrap()
            .then_with(|| {
                // equal magnitude: positive first
                let (si, sj) = (raw[i] < 0.0, raw[j] < 0.0);
                si.cmp(&sj)
            })
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|i| vectors.get(i, old)).collect();
        sign_normalize(&mut col);
        for i in 0..n {
            eigenvectors.set(i, new, col[i]);
        }
    }

    let signature = signature_of(&eigenvalues);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, signature })
}

/// Flips the vector so its first component above 1e-12 in magnitude is
/// positive. The absolute threshold skips rounding noise in components that
/// are mathematically zero.
fn sign_normalize(v: &mut [f64]) {
    for &x in v.iter() {
        if x.abs() > 1e-12 {
            if x < 0.0 {
                v.iter_mut().for_each(|y| *y = -*y);
            }
            return;
        }
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing work[p][q], accumulated into `vectors`.
fn rotate(work: &mut Matrix, vectors: &mut Matrix, p: usize, q: usize) {
    let apq = work.get(p, q);
    if apq == 0.0 {
        return;
    }
    let app = work.get(p, p);
    let aqq = work.get(q, q);
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = work.rows();
    work.set(p, p, app - t * apq);
    work.set(q, q, aqq + t * apq);
    work.set(p, q, 0.0);
    work.set(q, p, 0.0);
    for k in 0..n {
        if k != p && k != q {
            let akp = work.get(k, p);
            let akq = work.get(k, q);
            let new_p = c * akp - s * akq;
            let new_q = s * akp + c * akq;
            work.set(k, p, new_p);
            work.set(p, k, new_p);
            work.set(k, q, new_q);
            work.set(q, k, new_q);
        }
    }
    for k in 0..n {
        let vkp = vectors.get(k, p);
        let vkq = vectors.get(k, q);
        vectors.set(k, p, c * vkp - s * vkq);
        vectors.set(k, q, s * vkp + c * vkq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, random_symmetric, seeded_rng};

    fn reconstruct(dec: &SpectralDecomposition) -> Matrix {
        let n = dec.eigenvalues().len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lam = dec.eigenvalues()[k];
            for i in 0..n {
                for j in 0..n {
                    let v = out.get(i, j)
                        + lam * dec.eigenvectors().get(i, k) * dec.eigenvectors().get(j, k);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix_sorted_by_magnitude() {
        let a = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, -3.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let dec = sym_eig(&a).unwrap();
        assert_eq!(dec.eigenvalues(), &[-3.0, 2.0, 1.0]);
        assert_eq!(dec.signature(), Signature { p: 2, q: 1 });
    }

    #[test]
    fn rank_one_outer_product() {
        // z z^T with z = (-1, 0, 1): lambda_1 = 2, unit eigenvector z/sqrt(2)
        // sign-normalized to (1, 0, -1)/sqrt(2).
        let z = [-1.0, 0.0, 1.0];
        let mut a = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, z[i] * z[j]);
            }
        }
        let dec = sym_eig(&a).unwrap();
        assert_close(dec.eigenvalues()[0], 2.0, 1e-12);
        assert!(dec.eigenvalues()[1].abs() < 1e-12);
        assert!(dec.eigenvalues()[2].abs() < 1e-12);
        let s = 0.5f64.sqrt();
        assert_close(dec.eigenvectors().get(0, 0), s, 1e-12);
        assert_close(dec.eigenvectors().get(1, 0), 0.0, 1e-12);
        assert_close(dec.eigenvectors().get(2, 0), -s, 1e-12);
    }

    #[test]
    fn identity_keeps_orthonormal_basis() {
        let dec = sym_eig(&Matrix::identity(3)).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0, 1.0, 1.0]);
        let v = dec.eigenvectors();
        let gram = v.transpose().matmul(v).unwrap();
        assert!(gram.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-10);
        // sign convention: first significant component of each column positive
        for k in 0..3 {
            let col = v.column(k);
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut rng = seeded_rng(42);
        for n in [2usize, 4, 8, 12] {
            for _ in 0..20 {
                let a = random_symmetric(&mut rng, n, 3.0);
                let dec = sym_eig(&a).unwrap();
                let rec = reconstruct(&dec);
                let err = rec.sub(&a).unwrap().frobenius_norm();
                assert!(
                    err <= 1e-8 * a.frobenius_norm().max(1e-30),
                    "reconstruction error {err} for n={n}"
                );
                let v = dec.eigenvectors();
                let gram = v.transpose().matmul(v).unwrap();
                assert!(gram.sub(&Matrix::identity(n)).unwrap().max_abs() < 1e-10);
                for k in 1..n {
                    assert!(
                        dec.eigenvalues()[k - 1].abs() >= dec.eigenvalues()[k].abs() - 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn weyl_inequality_signed_sorted() {
        // Weyl pairs eigenvalues sorted by signed value, not magnitude.
        let mut rng = seeded_rng(7);
        for _ in 0..200 {
            let n = 6;
            let b = random_symmetric(&mut rng, n, 2.0);
            let e = random_symmetric(&mut rng, n, 0.3);
            let bp = b.add(&e).unwrap();
            let mut lb = sym_eig(&b).unwrap().eigenvalues().to_vec();
            let mut lbp = sym_eig(&bp).unwrap().eigenvalues().to_vec();
            lb.sort_by(|x, y| x.partial_cmp(y).unwrap());
            lbp.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let shift = lb
                .iter()
                .zip(&lbp)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(shift <= e.spectral_norm() + 1e-10);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(Error::Validation(_))));
    }
}
