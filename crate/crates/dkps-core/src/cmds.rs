//! Classical Multidimensional Scaling, scree-elbow dimension selection, and
//! orthogonal Procrustes alignment.
//!
//! CMDS of a dissimilarity matrix Delta into d dimensions:
//!
//! ```text
//! B = -1/2 H (Delta o Delta) H          (double centering)
//! coords column k = u_k(B) * |lambda_k(B)|^{1/2},  k = 1..d by |lambda| desc
//! ```
//!
//! Retained negative eigenvalues are scaled by |lambda|^{1/2} and recorded in
//! the signature; they raise a warning flag rather than an error so that a
//! non-Euclidean dissimilarity still embeds totally.

use crate::eig::{sym_eig, Signature, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::svd::svd;
use serde::{Deserialize, Serialize};

/// Absolute magnitude below which a retained eigenvalue counts as degenerate.
pub const DEGENERATE_EIGENVALUE_TOL: f64 = 1e-12;

/// Floor added to the denominator of the scree-elbow ratio.
pub const ELBOW_EPS_FLOOR: f64 = 1e-12;

/// Flags attached to an embedding whose retained spectrum is not cleanly
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EmbeddingWarnings {
    /// Retained eigenvalues below `-1e-12 * max(1, |lambda_1|)`.
    pub negative_eigenvalues: usize,
    /// Retained eigenvalues with magnitude below the degeneracy tolerance.
    pub near_zero_eigenvalues: usize,
}

impl EmbeddingWarnings {
    pub fn any(&self) -> bool {
        self.negative_eigenvalues > 0 || self.near_zero_eigenvalues > 0
    }
}

/// An n x d perspective configuration. Row i is the embedded point for
/// object i; column k has squared norm |eigvals[k]| and the columns are
/// mutually orthogonal.
#[derive(Debug, Clone)]
pub struct Embedding {
    coords: Matrix,
    eigvals: Vec<f64>,
    signature: Signature,
    warnings: EmbeddingWarnings,
}

impl Embedding {
    pub fn from_parts(
        coords: Matrix,
        eigvals: Vec<f64>,
        signature: Signature,
        warnings: EmbeddingWarnings,
    ) -> Self {
        Embedding { coords, eigvals, signature, warnings }
    }

    pub fn n(&self) -> usize {
        self.coords.rows()
    }

    pub fn dim(&self) -> usize {
        self.coords.cols()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    /// Row i as a slice (the perspective of object i).
    pub fn point(&self, i: usize) -> &[f64] {
        self.coords.row(i)
    }

    /// Retained eigenvalues, magnitude-descending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn warnings(&self) -> EmbeddingWarnings {
        self.warnings
    }
}

/// Orthogonal alignment `W` of one configuration onto another, with the
/// residual measured in three norms.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub rotation: Matrix,
    pub frob_err: f64,
    pub spec_err: f64,
    pub two_inf_err: f64,
}

/// CMDS embedding of a dissimilarity matrix into `d` dimensions.
///
/// `delta` must be symmetric, nonnegative, zero-diagonal. Errors if `d`
/// exceeds n or if every retained eigenvalue is below the degeneracy
/// tolerance in magnitude.
pub fn cmds_embed(delta: &Matrix, d: usize) -> Result<Embedding> {
    Ok(cmds_embed_full(delta, d)?.0)
}

/// As [`cmds_embed`], additionally returning the doubly centered matrix the
/// embedding was computed from (so diagnostics can reuse the exact B).
pub fn cmds_embed_full(delta: &Matrix, d: usize) -> Result<(Embedding, Matrix)> {
    validate_dissimilarity(delta)?;
    let n = delta.rows();
    if d == 0 || d > n {
        return Err(Error::Dimension(format!(
            "embedding dimension {d} out of range for {n} objects"
        )));
    }
    let b = delta.hadamard_pow(2.0)?.double_center()?;
    let embedding = embed_centered(&b, d)?;
    Ok((embedding, b))
}

/// Embeds an already doubly-centered matrix (top-d eigenpairs by magnitude).
pub fn embed_centered(b: &Matrix, d: usize) -> Result<Embedding> {
    embed_from_decomposition(&sym_eig(b)?, d)
}

/// Builds the embedding from an existing decomposition (top-d eigenpairs by
/// magnitude, columns scaled by |lambda|^{1/2}).
pub fn embed_from_decomposition(dec: &SpectralDecomposition, d: usize) -> Result<Embedding> {
    let n = dec.eigenvalues().len();
    if d == 0 || d > n {
        return Err(Error::Dimension(format!(
            "embedding dimension {d} out of range for {n} objects"
        )));
    }
    let vals = dec.leading_values(d).to_vec();
    let max_mag = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_mag < DEGENERATE_EIGENVALUE_TOL {
        return Err(Error::DegenerateEmbedding(format!(
            "all {d} retained eigenvalues below {DEGENERATE_EIGENVALUE_TOL:e} in magnitude"
        )));
    }
    let neg_tol = 1e-12 * dec.eigenvalues()[0].abs().max(1.0);
    let warnings = EmbeddingWarnings {
        negative_eigenvalues: vals.iter().filter(|&&v| v < -neg_tol).count(),
        near_zero_eigenvalues: vals
            .iter()
            .filter(|&&v| v.abs() < DEGENERATE_EIGENVALUE_TOL)
            .count(),
    };
    let mut coords = dec.leading_vectors(d);
    for k in 0..d {
        let scale = vals[k].abs().sqrt();
        for i in 0..n {
            coords.set(i, k, coords.get(i, k) * scale);
        }
    }
    let signature = dec.leading_signature(d);
    Ok(Embedding::from_parts(coords, vals, signature, warnings))
}

fn validate_dissimilarity(delta: &Matrix) -> Result<()> {
    if !delta.is_square() {
        return Err(Error::Dimension(format!(
            "dissimilarity matrix must be square, got {}x{}",
            delta.rows(),
            delta.cols()
        )));
    }
    let tol = 1e-10 * delta.max_abs().max(1.0);
    if delta.asymmetry() > tol {
        return Err(Error::Validation("dissimilarity matrix is asymmetric".into()));
    }
    for i in 0..delta.rows() {
        if delta.get(i, i).abs() > tol {
            return Err(Error::Validation(format!(
                "dissimilarity diagonal entry ({i},{i}) = {} is not zero",
                delta.get(i, i)
            )));
        }
        for j in 0..delta.cols() {
            if delta.get(i, j) < 0.0 {
                return Err(Error::Validation(format!(
                    "negative dissimilarity at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Scree elbow: the position before the largest relative drop.
///
/// Input must be sorted by descending magnitude. Returns the argmax over
/// k in [1, len-1] of |lambda_k| / (|lambda_{k+1}| + 1e-12), smallest k on
/// ties.
pub fn elbow_dimension(eigenvalues: &[f64]) -> Result<usize> {
    if eigenvalues.len() < 2 {
        return Err(Error::Validation(
            "elbow selection needs at least 2 eigenvalues".into(),
        ));
    }
    let mut best_k = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for k in 0..eigenvalues.len() - 1 {
        let ratio = eigenvalues[k].abs() / (eigenvalues[k + 1].abs() + ELBOW_EPS_FLOOR);
        if ratio > best_ratio {
            best_ratio = ratio;
            best_k = k + 1;
        }
    }
    Ok(best_k)
}

/// Closed-form orthogonal Procrustes alignment of `psi_hat` onto `psi`.
///
/// W = U V^T from the SVD of psi_hat^T psi minimizes the Frobenius norm of
/// psi_hat W - psi over orthogonal W; the spectral and two-to-infinity norms
/// of the same residual are reported alongside.
pub fn procrustes_align(psi_hat: &Matrix, psi: &Matrix) -> Result<AlignmentResult> {
    if psi_hat.rows() != psi.rows() || psi_hat.cols() != psi.cols() {
        return Err(Error::Validation(format!(
            "configurations differ in shape: {}x{} vs {}x{}",
            psi_hat.rows(),
            psi_hat.cols(),
            psi.rows(),
            psi.cols()
        )));
    }
    let cross = psi_hat.transpose().matmul(psi)?;
    let s = svd(&cross)?;
    let rotation = s.u.matmul(&s.v.transpose())?;
    let residual = psi_hat.matmul(&rotation)?.sub(psi)?;
    Ok(AlignmentResult {
        rotation,
        frob_err: residual.frobenius_norm(),
        spec_err: residual.spectral_norm(),
        two_inf_err: residual.two_inf_norm(),
    })
}
