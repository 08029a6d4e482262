//! Singular value decomposition via one-sided Jacobi (Hestenes) rotations.
//!
//! Same rationale as the eigensolver: small matrices, deterministic sweeps,
//! explicit tolerances. Produces the thin factorization A = U S V^T with
//! k = min(rows, cols) columns in U and V.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Convergence target for column orthogonality, relative to column norms.
const ORTHO_TOL: f64 = 1e-14;

/// Thin SVD: `a = u * diag(sigma) * v^T`, `sigma` nonincreasing and
/// nonnegative, `u` and `v` column-orthonormal.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Computes the thin SVD of an arbitrary real matrix.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose())?;
        Ok(Svd { u: t.v, sigma: t.sigma, v: t.u })
    }
}

/// Singular values only (nonincreasing).
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // One-sided Jacobi cannot fail to produce singular values within the
    // budget for finite input; fall back to column norms if it ever does.
    match svd(a) {
        Ok(s) => s.sigma,
        Err(_) => {
            let mut s: Vec<f64> =
                (0..a.cols()).map(|j| a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
            s.sort_by(|x, y| y.partial_cmp(x).unwrap());
            s
        }
    }
}

fn svd_tall(a: &Matrix) -> Result<Svd> {
    let m = a.rows();
    let n = a.cols();
    // column-major copy of A; rotations act on column pairs
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = Matrix::identity(n);
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    loop {
        let mut converged = true;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                converged = false;
                if rotations >= cap {
                    return Err(Error::Numerical(format!(
                        "Jacobi SVD did not converge in {cap} rotations"
                    )));
                }
                rotations += 1;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let xp = cols[p][i];
                    let xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if converged {
            break;
        }
    }

    // Singular values are the column norms; sort nonincreasing (stable by
    // original index on ties).
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = Matrix::zeros(m, n);
    let mut vv = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        sigma.push(norms[old]);
        if norms[old] > 0.0 {
            let mut ucol: Vec<f64> = cols[old].iter().map(|x| x / norms[old]).collect();
            let mut vcol: Vec<f64> = (0..n).map(|i| v.get(i, old)).collect();
            // deterministic sign: first significant component of u positive
            if let Some(&first) = ucol.iter().find(|x| x.abs() > 1e-12) {
                if first < 0.0 {
                    ucol.iter_mut().for_each(|x| *x = -*x);
                    vcol.iter_mut().for_each(|x| *x = -*x);
                }
            }
            for i in 0..m {
                u.set(i, new, ucol[i]);
            }
            for i in 0..n {
                vv.set(i, new, vcol[i]);
            }
        } else {
            for i in 0..n {
                vv.set(i, new, v.get(i, old));
            }
        }
    }
    complete_zero_columns(&mut u, &sigma);
    Ok(Svd { u, sigma, v: vv })
}

/// Fills U columns belonging to zero singular values with a deterministic
/// orthonormal completion: for each such column, the canonical basis vector
/// with the largest residual after projecting out every other column wins
/// (ties to the smaller index). Projecting against not-yet-filled zero
/// columns is a no-op, so a single pass in column order is enough.
fn complete_zero_columns(u: &mut Matrix, sigma: &[f64]) {
    let m = u.rows();
    let k = u.cols();
    for j in 0..k {
        if sigma[j] > 0.0 {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for cand in 0..m {
            let mut e = vec![0.0; m];
            e[cand] = 1.0;
            for jj in 0..k {
                if jj == j {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| e[i] * u.get(i, jj)).sum();
                for i in 0..m {
                    e[i] -= dot * u.get(i, jj);
                }
            }
            let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(b, _)| norm > *b + 1e-12) {
                best = Some((norm, e));
            }
        }
        if let Some((norm, mut e)) = best {
            if norm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= norm);
                for i in 0..m {
                    u.set(i, j, e[i]);
                }
            }
        }
    }
}
