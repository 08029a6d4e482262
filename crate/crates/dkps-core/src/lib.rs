//! Perspective-space embeddings of generative models from their query
//! responses, with concentration-bound evaluation and coverage experiments.
//!
//! A collection of n black-box models answers m queries, r replicates each;
//! an upstream encoder turns every response into a vector in R^p. This crate
//! embeds the models into R^d by Classical Multidimensional Scaling of the
//! pairwise dissimilarities between mean responses, and quantifies how far
//! the sampled embedding can sit from its population counterpart:
//!
//! * [`pipeline`] — response tensor to perspective embedding, with all
//!   intermediates (dissimilarities, doubly centered matrix) returned.
//! * [`cmds`] — Classical MDS, scree-elbow dimension selection, orthogonal
//!   Procrustes alignment.
//! * [`bounds`] — entrywise concentration probability, spectral noise
//!   threshold, the cubic uniform-error bound, assumption validators, the
//!   perspective difference test, and per-term perturbation diagnostics.
//! * [`montecarlo`] — seeded coverage experiments (simulated binary-response
//!   populations and bootstrap resampling of ingested pools).
//! * [`io`] — response ingestion (CSV/JSONL) and report persistence.
//! * [`matrix`], [`eig`], [`svd`] — the dense kernels everything runs on.

pub mod bounds;
pub mod cmds;
pub mod eig;
pub mod error;
pub mod io;
pub mod matrix;
pub mod montecarlo;
pub mod pipeline;
pub mod svd;

#[cfg(test)]
pub(crate) mod testutil;

pub use crate::bounds::diagnostics::{remainder_diagnostics, RemainderReport};
pub use crate::bounds::{
    embedding_error_bound, embedding_error_bound_at, entrywise_concentration_prob,
    error_bound_coeffs, perspective_test, spectral_noise_threshold, validate_assumptions,
    BoundParams, PolyCoeffs,
};
pub use crate::cmds::{
    cmds_embed, elbow_dimension, procrustes_align, AlignmentResult, Embedding,
};
pub use crate::eig::{sym_eig, Signature, SpectralDecomposition};
pub use crate::error::{Error, Result};
pub use crate::matrix::Matrix;
pub use crate::montecarlo::{
    bernoulli_population, bootstrap_coverage, bootstrap_resample, coverage_experiment,
    derive_seed, gamma_of_bernoulli, sample_means, BernoulliPopulation, BootstrapConfig,
    CoverageReport, SimulationConfig,
};
pub use crate::pipeline::{
    dissimilarity_matrix, dkps_embed, mean_responses, population_embed, Dissimilarity,
    DissimilarityMatrix, DkpsOutput, MeanResponseSet, ResponseTensor,
};
pub use crate::svd::{svd, Svd};
