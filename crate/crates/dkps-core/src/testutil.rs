//! Shared helpers for unit tests (compiled only under `cfg(test)`).

use crate::matrix::Matrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "expected {expected}, got {actual} (tol {tol})"
    );
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random_range(-scale..scale);
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    a
}

/// Haar-ish random orthogonal matrix: Gram-Schmidt on Gaussian columns with
/// a positive-diagonal fix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let mut v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            for c in &cols {
                let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        if !ok {
            continue;
        }
        let mut q = Matrix::zeros(n, n);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                q.set(i, j, c[i]);
            }
        }
        return q;
    }
}

/// Box-Muller standard normal.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>();
        if u > 0.0 {
            let v: f64 = rng.random::<f64>();
            return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
        }
    }
}

/// Symmetric matrix with exactly `d` nonzero eigenvalues `lambdas` (magnitude
/// in descending order is NOT assumed here; callers sort as needed).
pub fn rank_d_symmetric(rng: &mut ChaCha8Rng, n: usize, lambdas: &[f64]) -> Matrix {
    let q = random_orthogonal(rng, n);
    let mut a = Matrix::zeros(n, n);
    for (k, &lam) in lambdas.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let v = a.get(i, j) + lam * q.get(i, k) * q.get(j, k);
                a.set(i, j, v);
            }
        }
    }
    // exact symmetrization against rounding
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, s);
            a.set(j, i, s);
        }
    }
    a
}
