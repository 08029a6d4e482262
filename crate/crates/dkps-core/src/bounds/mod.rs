//! Closed-form concentration bounds, assumption validators, and the
//! perspective hypothesis test.
//!
//! The quantities here are deterministic formulas in the experiment
//! parameters (n models, m queries, r replicates, rank d, confidence knob
//! delta) and the spectrum of the doubly centered population matrix B:
//!
//! ```text
//! entrywise probability >= 1 - 16 * sum(gamma_ij) / (r m eps^2)
//! spectral threshold     x = (n^3 / r)^(1/2 - delta)
//! uniform error bound    C1 x + C2 x^2 + C3 x^3      (C0 = 0)
//! ```
//!
//! where gamma_ij is the trace of the covariance of the response
//! distribution of model i to query j, and the cubic coefficients depend on
//! lambda_1, lambda_d (largest / smallest retained eigenvalue of B) and d.

pub mod diagnostics;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sym_eig;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Inputs to the error bound: experiment sizes, confidence knob, retained
/// spectrum summary, and the per-cell trace variabilities.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub n: usize,
    pub m: usize,
    pub r: u64,
    pub d: usize,
    pub delta: f64,
    pub lambda_1: f64,
    pub lambda_d: f64,
    /// n x m matrix of trace variabilities gamma_ij >= 0.
    pub gamma: Matrix,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Domain(format!(
                "delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        if self.lambda_d <= 0.0 {
            return Err(Error::Domain(format!(
                "lambda_d must be positive, got {}",
                self.lambda_d
            )));
        }
        if self.lambda_1 < self.lambda_d {
            return Err(Error::Domain(format!(
                "lambda_1 = {} smaller than lambda_d = {}",
                self.lambda_1, self.lambda_d
            )));
        }
        if self.n < 1 || self.m < 1 || self.r < 1 || self.d < 1 {
            return Err(Error::Validation("counts must be at least 1".into()));
        }
        if self.gamma.as_slice().iter().any(|&g| g < 0.0) {
            return Err(Error::Domain("negative trace variability".into()));
        }
        Ok(())
    }

    pub fn gamma_sum(&self) -> f64 {
        self.gamma.as_slice().iter().sum()
    }
}

/// Lower bound on the probability that every entry of the centered sample
/// matrix sits within `eps` of its population counterpart. Clamped at zero:
/// a vacuous lower bound is reported as 0 rather than a negative number.
pub fn entrywise_concentration_prob(
    gamma_sum: f64,
    n: usize,
    m: usize,
    r: u64,
    eps: f64,
) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if gamma_sum < 0.0 {
        return Err(Error::Domain(format!("gamma_sum must be >= 0, got {gamma_sum}")));
    }
    if n < 1 || m < 1 || r < 1 {
        return Err(Error::Validation("counts must be at least 1".into()));
    }
    let raw = 1.0 - 16.0 * gamma_sum / (r as f64 * m as f64 * eps * eps);
    Ok(raw.max(0.0))
}

/// The high-probability spectral noise level (n^3 / r)^(1/2 - delta).
pub fn spectral_noise_threshold(n: usize, r: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 0.5), got {delta}"
        )));
    }
    if n < 1 || r < 1 {
        return Err(Error::Validation("counts must be at least 1".into()));
    }
    let ratio = (n as f64).powi(3) / r as f64;
    Ok(ratio.powf(0.5 - delta))
}

/// Coefficients (C0, C1, C2, C3) of the cubic error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl PolyCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * (self.c2 + x * self.c3))
    }
}

/// Cubic coefficients of the uniform embedding-error bound.
///
/// All coefficients are nonnegative; C0 is identically zero.
pub fn error_bound_coeffs(lambda_1: f64, lambda_d: f64, d: usize) -> Result<PolyCoeffs> {
    if lambda_d <= 0.0 {
        return Err(Error::Domain(format!(
            "lambda_d must be positive, got {lambda_d}"
        )));
    }
    if lambda_1 < lambda_d {
        return Err(Error::Domain(format!(
            "lambda_1 = {lambda_1} smaller than lambda_d = {lambda_d}"
        )));
    }
    if d < 1 {
        return Err(Error::Validation("d must be at least 1".into()));
    }
    let df = d as f64;
    let one_plus = 1.0 + SQRT_2;
    let c1 = (1.0 / lambda_d.sqrt()) * (one_plus + SQRT_2 * df * (1.0 + 2.0 * df) / one_plus);
    let c2 = 4.0 * df * (lambda_1.sqrt() / lambda_d.powi(2))
        + (1.0 / lambda_d.powf(1.5)) * (1.0 + 2.0 * df * (3.0 + SQRT_2) / one_plus);
    let c3 = (1.0 / lambda_d.powf(2.5))
        * (df * ((8.0 * SQRT_2 + 16.0 * (1.0 + df)) / one_plus + 4.0 * SQRT_2));
    Ok(PolyCoeffs { c0: 0.0, c1, c2, c3 })
}

/// The uniform embedding-error bound evaluated at an explicit noise level x.
pub fn embedding_error_bound_at(
    lambda_1: f64,
    lambda_d: f64,
    d: usize,
    x: f64,
) -> Result<f64> {
    Ok(error_bound_coeffs(lambda_1, lambda_d, d)?.eval(x))
}

/// The uniform embedding-error bound at the spectral noise threshold implied
/// by the params.
pub fn embedding_error_bound(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let x = spectral_noise_threshold(params.n, params.r, params.delta)?;
    embedding_error_bound_at(params.lambda_1, params.lambda_d, params.d, x)
}

/// Rank / eigenvalue-stability report for a doubly centered matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Count of eigenvalues above 1e-10 * |lambda_1| in magnitude.
    pub effective_rank: usize,
    /// Magnitude of the d-th eigenvalue (0 when rank < d).
    pub lambda_d: f64,
    /// Magnitude of the largest eigenvalue.
    pub lambda_1: f64,
    pub rank_matches: bool,
    pub lambda_d_above_floor: bool,
    pub lambda_1_below_cap: bool,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.rank_matches && self.lambda_d_above_floor && self.lambda_1_below_cap
    }
}

/// Report-only check of the constant-rank and eigenvalue-stability
/// conditions: rank == d, lambda_d > c1, lambda_1 < c2. Never errors on a
/// failed flag.
pub fn validate_assumptions(
    b: &Matrix,
    d: usize,
    c1: f64,
    c2: f64,
) -> Result<AssumptionReport> {
    let dec = sym_eig(b)?;
    let values = dec.eigenvalues();
    let lambda_1 = values.first().map(|v| v.abs()).unwrap_or(0.0);
    let rank_tol = 1e-10 * lambda_1;
    let effective_rank = values.iter().filter(|v| v.abs() > rank_tol).count();
    let lambda_d = if d >= 1 && d <= values.len() {
        values[d - 1].abs()
    } else {
        0.0
    };
    Ok(AssumptionReport {
        effective_rank,
        lambda_d,
        lambda_1,
        rank_matches: effective_rank == d,
        lambda_d_above_floor: lambda_d > c1,
        lambda_1_below_cap: lambda_1 < c2,
    })
}

/// Same report for every matrix of a sequence (e.g. B over growing n).
pub fn validate_assumption_sequence(
    bs: &[Matrix],
    d: usize,
    c1: f64,
    c2: f64,
) -> Result<Vec<AssumptionReport>> {
    bs.iter().map(|b| validate_assumptions(b, d, c1, c2)).collect()
}

/// Outcome of the two-perspective difference test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveTest {
    /// The statistic ||psi_i - psi_j||.
    pub statistic: f64,
    /// Strictly exceeds 2 * kappa: evidence that the perspectives differ.
    pub reject: bool,
}

/// Tests whether two estimated perspectives differ: rejects iff the distance
/// between them strictly exceeds 2 * kappa.
pub fn perspective_test(psi_i: &[f64], psi_j: &[f64], kappa: f64) -> Result<PerspectiveTest> {
    if psi_i.len() != psi_j.len() {
        return Err(Error::Validation(format!(
            "perspective dimensions differ: {} vs {}",
            psi_i.len(),
            psi_j.len()
        )));
    }
    if kappa <= 0.0 {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let statistic = psi_i
        .iter()
        .zip(psi_j)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(PerspectiveTest { statistic, reject: statistic > 2.0 * kappa })
}
