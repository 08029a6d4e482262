//! The embedding pipeline: response tensor -> per-model mean responses ->
//! pairwise dissimilarities -> doubly centered matrix -> perspective
//! embedding.
//!
//! Two dissimilarity conventions are supported:
//!
//! * `Root` (default): d(i,i') = m^{-1/2} ||Xbar_i - Xbar_i'||_F^{1/2}, so the
//!   entrywise square of the dissimilarity matrix is (1/m) times the pairwise
//!   Frobenius distance.
//! * `Plain`: d(i,i') = m^{-1/2} ||Xbar_i - Xbar_i'||_F (no outer root).
//!
//! All intermediates are returned to callers so diagnostics run on the exact
//! matrices the embedding used, never on recomputed ones.

use crate::cmds::{cmds_embed_full, Embedding};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

/// How mean-response distance is turned into a dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dissimilarity {
    /// m^{-1/2} * (Frobenius distance)^{1/2}
    #[default]
    Root,
    /// m^{-1/2} * Frobenius distance
    Plain,
}

impl Dissimilarity {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "root" => Ok(Dissimilarity::Root),
            "plain" => Ok(Dissimilarity::Plain),
            other => Err(Error::Validation(format!(
                "unknown dissimilarity convention '{other}' (expected root|plain)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dissimilarity::Root => "root",
            Dissimilarity::Plain => "plain",
        }
    }
}

/// Embedded responses x_{ijk} in R^p for n models, m queries, r replicates.
/// Storage is a flat vector indexed (((i * m) + j) * r + k) * p + component.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTensor {
    n: usize,
    m: usize,
    r: usize,
    p: usize,
    values: Vec<f64>,
}

impl ResponseTensor {
    pub fn new(n: usize, m: usize, r: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || m < 1 || r < 1 || p < 1 {
            return Err(Error::Validation(format!(
                "tensor shape out of range: n={n} m={m} r={r} p={p} (need n>=2, m,r,p>=1)"
            )));
        }
        if values.len() != n * m * r * p {
            return Err(Error::Dimension(format!(
                "tensor needs {} values, got {}",
                n * m * r * p,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite response value {bad}")));
        }
        Ok(ResponseTensor { n, m, r, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The p-vector for replicate k of model i, query j.
    #[inline]
    pub fn response(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let base = (((i * self.m) + j) * self.r + k) * self.p;
        &self.values[base..base + self.p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-model mean responses: n matrices of shape m x p.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanResponseSet {
    n: usize,
    m: usize,
    p: usize,
    means: Vec<Matrix>,
}

impl MeanResponseSet {
    pub fn new(means: Vec<Matrix>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::Validation("need means for at least 2 models".into()));
        }
        let (m, p) = (means[0].rows(), means[0].cols());
        if means.iter().any(|x| x.rows() != m || x.cols() != p) {
            return Err(Error::Dimension("inconsistent mean-matrix shapes".into()));
        }
        Ok(MeanResponseSet { n: means.len(), m, p, means })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mean(&self, i: usize) -> &Matrix {
        &self.means[i]
    }
}

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise dissimilarities.
/// The triangle inequality is deliberately not asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(Matrix);

impl DissimilarityMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("dissimilarity matrix must be square".into()));
        }
        let tol = 1e-10 * m.max_abs().max(1.0);
        if m.asymmetry() > tol {
            return Err(Error::Validation("dissimilarity matrix is asymmetric".into()));
        }
        for i in 0..m.rows() {
            if m.get(i, i).abs() > tol {
                return Err(Error::Validation("dissimilarity diagonal is not zero".into()));
            }
        }
        if m.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Validation("negative dissimilarity entry".into()));
        }
        Ok(DissimilarityMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }
}

/// Everything an embedding run produces, intermediates included.
#[derive(Debug, Clone)]
pub struct DkpsOutput {
    pub embedding: Embedding,
    pub dissimilarity: DissimilarityMatrix,
    /// The doubly centered matrix the eigendecomposition ran on.
    pub centered: Matrix,
}

/// Mean over replicates: row j of the i-th output is (1/r) sum_k x_{ijk}.
/// Summation order is fixed (ascending k) and the sum is divided by r (not
/// scaled by a reciprocal) so results are bit-reproducible and exact
/// whenever the accumulated sums are.
pub fn mean_responses(t: &ResponseTensor) -> MeanResponseSet {
    let rf = t.r() as f64;
    let mut means = Vec::with_capacity(t.n());
    for i in 0..t.n() {
        let mut acc = Matrix::zeros(t.m(), t.p());
        for j in 0..t.m() {
            for k in 0..t.r() {
                let resp = t.response(i, j, k);
                for (l, &v) in resp.iter().enumerate() {
                    acc.set(j, l, acc.get(j, l) + v);
                }
            }
            for l in 0..t.p() {
                acc.set(j, l, acc.get(j, l) / rf);
            }
        }
        means.push(acc);
    }
    MeanResponseSet::new(means).expect("tensor invariants carry over")
}

/// Pairwise dissimilarities between mean responses under `convention`.
pub fn dissimilarity_matrix(
    means: &MeanResponseSet,
    convention: Dissimilarity,
) -> DissimilarityMatrix {
    let n = means.n();
    let inv_sqrt_m = 1.0 / (means.m() as f64).sqrt();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = means.mean(i).sub(means.mean(j)).expect("shapes equal").frobenius_norm();
            let value = match convention {
                Dissimilarity::Root => inv_sqrt_m * dist.sqrt(),
                Dissimilarity::Plain => inv_sqrt_m * dist,
            };
            d.set(i, j, value);
            d.set(j, i, value);
        }
    }
    DissimilarityMatrix(d)
}

/// Full pipeline from a response tensor: means -> dissimilarities ->
/// double centering -> embedding.
pub fn dkps_embed(
    t: &ResponseTensor,
    d: usize,
    convention: Dissimilarity,
) -> Result<DkpsOutput> {
    population_embed(&mean_responses(t), d, convention)
}

/// Pipeline from mean responses directly (the population path; identical to
/// [`dkps_embed`] on a zero-noise tensor).
pub fn population_embed(
    means: &MeanResponseSet,
    d: usize,
    convention: Dissimilarity,
) -> Result<DkpsOutput> {
    let dissimilarity = dissimilarity_matrix(means, convention);
    let (embedding, centered) = cmds_embed_full(dissimilarity.matrix(), d)?;
    Ok(DkpsOutput { embedding, dissimilarity, centered })
}
