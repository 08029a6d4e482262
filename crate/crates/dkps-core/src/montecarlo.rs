//! Seeded population generation, fast replicate sampling, Monte-Carlo
//! coverage experiments, and the bootstrap coverage protocol.
//!
//! Determinism contract: a config plus a 64-bit master seed fully determines
//! every report, independent of thread count. Each Monte-Carlo sample owns an
//! RNG stream derived from the master seed via [`derive_seed`]; aggregation
//! collects per-sample results into an index-ordered vector, so scheduling
//! cannot reorder anything.
//!
//! Sampling shortcut: a mean of r Bernoulli(p) replicates is exactly
//! Binomial(r, p)/r, so the sampler draws one binomial count per cell
//! instead of r individual responses. The distribution is unchanged; the
//! work drops from O(r) to O(1) per cell.

use crate::bounds::{embedding_error_bound, BoundParams};
use crate::cmds::{cmds_embed_full, elbow_dimension, embed_from_decomposition, procrustes_align};
use crate::eig::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pipeline::{
    dissimilarity_matrix, mean_responses, Dissimilarity, MeanResponseSet, ResponseTensor,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// SplitMix64 scramble step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a tag path.
///
/// The mixing function is fixed and published so results are reproducible
/// from the config alone: starting from the master seed, each tag t applies
/// `state = splitmix64(state XOR (t * 0x9E3779B97F4A7C15))`, and the final
/// state is scrambled once more. Streams used by this crate:
///
/// * population attempt a for size n: tags `[n, 0, a]`
/// * simulation Monte-Carlo sample b:  tags `[n, 1, b]`
/// * bootstrap Monte-Carlo sample b:   tags `[n, 2, b]`
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    for &t in tags {
        state = splitmix64(state ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    splitmix64(state)
}

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Success probabilities of a binary-response population: n models by m
/// queries, entries in [0, 1] (the generator only produces the open
/// interval; sampling tolerates the endpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliPopulation {
    probs: Matrix,
}

impl BernoulliPopulation {
    pub fn new(probs: Matrix) -> Result<Self> {
        if probs.rows() < 2 {
            return Err(Error::Validation("population needs at least 2 models".into()));
        }
        if probs.as_slice().iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Validation("probabilities must lie in [0, 1]".into()));
        }
        Ok(BernoulliPopulation { probs })
    }

    pub fn n(&self) -> usize {
        self.probs.rows()
    }

    pub fn m(&self) -> usize {
        self.probs.cols()
    }

    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    /// Population mean responses: model i maps to the m x 1 matrix of its
    /// success probabilities.
    pub fn means(&self) -> MeanResponseSet {
        let means = (0..self.n())
            .map(|i| {
                Matrix::new(self.m(), 1, self.probs.row(i).to_vec()).expect("valid shape")
            })
            .collect();
        MeanResponseSet::new(means).expect("population invariants")
    }
}

/// Draws an n x m population of i.i.d. uniform(0,1) success probabilities,
/// deterministically from the seed. Endpoints are excluded.
pub fn bernoulli_population(n: usize, m: usize, seed: u64) -> Result<BernoulliPopulation> {
    if n < 2 || m < 1 {
        return Err(Error::Validation(format!(
            "population shape out of range: n={n}, m={m}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n * m {
        data.push(open_unit(&mut rng));
    }
    Ok(BernoulliPopulation { probs: Matrix::new(n, m, data)? })
}

/// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// Trace variability of each cell: for a Bernoulli(p) scalar response the
/// covariance trace is p(1-p).
pub fn gamma_of_bernoulli(pop: &BernoulliPopulation) -> Matrix {
    let data = pop.probs.as_slice().iter().map(|&p| p * (1.0 - p)).collect();
    Matrix::new(pop.n(), pop.m(), data).expect("shape preserved")
}

/// Sample means over r replicates via the binomial shortcut: each cell is
/// Binomial(r, p)/r, drawn in ascending (i, j) order from the seeded stream.
pub fn sample_means(pop: &BernoulliPopulation, r: u64, seed: u64) -> Result<MeanResponseSet> {
    if r < 1 {
        return Err(Error::Validation("replicate count must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let rf = r as f64;
    let mut means = Vec::with_capacity(pop.n());
    for i in 0..pop.n() {
        let mut column = Vec::with_capacity(pop.m());
        for j in 0..pop.m() {
            let p = pop.probs.get(i, j);
            let count = Binomial::new(r, p)
                .map_err(|e| Error::Domain(format!("binomial parameters: {e}")))?
                .sample(&mut rng);
            column.push(count as f64 / rf);
        }
        means.push(Matrix::new(pop.m(), 1, column)?);
    }
    MeanResponseSet::new(means)
}

/// Gaussian population extension: vector responses in R^p with spherical
/// noise. Off by default in the CLI; the Bernoulli path is the primary one.
#[derive(Debug, Clone)]
pub struct GaussianPopulation {
    /// n matrices of shape m x p holding the population means.
    pub means: MeanResponseSet,
    /// Per-coordinate standard deviation of one response.
    pub sigma: f64,
}

/// Draws an n x m x p population of uniform(0,1) means with noise level
/// sigma.
pub fn gaussian_population(
    n: usize,
    m: usize,
    p: usize,
    sigma: f64,
    seed: u64,
) -> Result<GaussianPopulation> {
    if n < 2 || m < 1 || p < 1 {
        return Err(Error::Validation(format!(
            "population shape out of range: n={n}, m={m}, p={p}"
        )));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let mut rng = rng_from(seed);
    let mut means = Vec::with_capacity(n);
    for _ in 0..n {
        let data: Vec<f64> = (0..m * p).map(|_| open_unit(&mut rng)).collect();
        means.push(Matrix::new(m, p, data)?);
    }
    Ok(GaussianPopulation { means: MeanResponseSet::new(means)?, sigma })
}

/// Sample means for the Gaussian population: the mean of r spherical
/// Gaussian replicates is exactly Gaussian with scale sigma / sqrt(r).
pub fn gaussian_sample_means(
    pop: &GaussianPopulation,
    r: u64,
    seed: u64,
) -> Result<MeanResponseSet> {
    if r < 1 {
        return Err(Error::Validation("replicate count must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let scale = pop.sigma / (r as f64).sqrt();
    let (m, p) = (pop.means.m(), pop.means.p());
    let mut means = Vec::with_capacity(pop.means.n());
    for i in 0..pop.means.n() {
        let mut data = Vec::with_capacity(m * p);
        for j in 0..m {
            for l in 0..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(pop.means.mean(i).get(j, l) + scale * z);
            }
        }
        means.push(Matrix::new(m, p, data)?);
    }
    MeanResponseSet::new(means)
}

/// How the replicate count scales with n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RRule {
    /// r = ceil(n^exponent)
    Exponent(f64),
    Fixed(u64),
}

impl RRule {
    pub fn replicates(&self, n: usize) -> u64 {
        match *self {
            RRule::Exponent(e) => (n as f64).powf(e).ceil() as u64,
            RRule::Fixed(r) => r,
        }
    }
}

/// Embedding-dimension selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DRule {
    /// Scree elbow over the eigenvalues above 1e-10 |lambda_1| in magnitude
    /// (the structural zero of double centering never enters the scan).
    Elbow,
    Fixed(usize),
}

impl DRule {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "elbow" {
            return Ok(DRule::Elbow);
        }
        if let Some(k) = s.strip_prefix("fixed:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Validation(format!("bad dimension rule '{s}'")))?;
            if k == 0 {
                return Err(Error::Validation("fixed dimension must be >= 1".into()));
            }
            return Ok(DRule::Fixed(k));
        }
        Err(Error::Validation(format!(
            "unknown dimension rule '{s}' (expected elbow|fixed:K)"
        )))
    }

    pub fn name(&self) -> String {
        match self {
            DRule::Elbow => "elbow".into(),
            DRule::Fixed(k) => format!("fixed:{k}"),
        }
    }
}

/// Which norm of the aligned residual enters the coverage comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNorm {
    #[default]
    Frobenius,
    Spectral,
    TwoInf,
}

impl ErrorNorm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(ErrorNorm::Frobenius),
            "spectral" => Ok(ErrorNorm::Spectral),
            "two-inf" => Ok(ErrorNorm::TwoInf),
            other => Err(Error::Validation(format!(
                "unknown norm '{other}' (expected frobenius|spectral|two-inf)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorNorm::Frobenius => "frobenius",
            ErrorNorm::Spectral => "spectral",
            ErrorNorm::TwoInf => "two-inf",
        }
    }

    fn pick(&self, errs: &SampleError) -> f64 {
        match self {
            ErrorNorm::Frobenius => errs.frob_err,
            ErrorNorm::Spectral => errs.spec_err,
            ErrorNorm::TwoInf => errs.two_inf_err,
        }
    }
}

/// Configuration of the simulated coverage experiment.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n_list: Vec<usize>,
    pub m: usize,
    pub r_rule: RRule,
    pub mc_samples: usize,
    pub delta: f64,
    pub d_rule: DRule,
    pub seed: u64,
    pub convention: Dissimilarity,
    pub norm: ErrorNorm,
    /// Worker cap; `None` means all cores (or the DKPS_THREADS env var as
    /// applied by the CLI).
    pub threads: Option<usize>,
    /// Test hook: use this population instead of generating one (single
    /// n only).
    pub population_override: Option<BernoulliPopulation>,
    /// Extension: vector responses with spherical Gaussian noise instead of
    /// scalar Bernoulli ones.
    pub gaussian: Option<GaussianSpec>,
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianSpec {
    pub p: usize,
    pub sigma: f64,
}

impl SimulationConfig {
    pub fn defaults(seed: u64) -> Self {
        SimulationConfig {
            n_list: vec![10, 12, 15, 18, 20],
            m: 3,
            r_rule: RRule::Exponent(5.5),
            mc_samples: 100,
            delta: 0.25,
            d_rule: DRule::Elbow,
            seed,
            convention: Dissimilarity::Root,
            norm: ErrorNorm::Frobenius,
            threads: None,
            population_override: None,
            gaussian: None,
        }
    }
}

/// One report row (mirrors the published CSV schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub m: usize,
    pub r: u64,
    pub d: usize,
    pub avg_min_error: f64,
    pub upper_bound: f64,
    pub coverage: f64,
    pub mc_samples: usize,
    pub delta: f64,
    pub norm: String,
    pub seed: u64,
}

/// Aligned-residual norms for one Monte-Carlo sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleError {
    pub n: usize,
    pub sample_id: usize,
    pub frob_err: f64,
    pub spec_err: f64,
    pub two_inf_err: f64,
}

/// Coverage rows plus the complete per-sample error log they were computed
/// from, so coverage is auditable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub samples: Vec<SampleError>,
}

impl CoverageReport {
    /// Recomputes the coverage fraction of each row from the sample log;
    /// equals the stored value exactly.
    pub fn recompute_coverage(&self, norm: ErrorNorm) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                let hits = self
                    .samples
                    .iter()
                    .filter(|s| s.n == row.n)
                    .filter(|s| {
                        let e = match norm {
                            ErrorNorm::Frobenius => s.frob_err,
                            ErrorNorm::Spectral => s.spec_err,
                            ErrorNorm::TwoInf => s.two_inf_err,
                        };
                        e <= row.upper_bound
                    })
                    .count();
                hits as f64 / row.mc_samples as f64
            })
            .collect()
    }
}

/// Selects the embedding dimension from a decomposition per the rule,
/// scanning only eigenvalues above the rank tolerance for the elbow.
fn select_dimension(values: &[f64], rule: DRule) -> Result<usize> {
    match rule {
        DRule::Fixed(k) => {
            if k > values.len() {
                return Err(Error::Dimension(format!(
                    "fixed dimension {k} exceeds n = {}",
                    values.len()
                )));
            }
            Ok(k)
        }
        DRule::Elbow => {
            let lead = values.first().map(|v| v.abs()).unwrap_or(0.0);
            let tol = 1e-10 * lead;
            let nonzero: Vec<f64> =
                values.iter().copied().filter(|v| v.abs() > tol).collect();
            match nonzero.len() {
                0 => Err(Error::DegenerateEmbedding(
                    "no eigenvalue above the rank tolerance".into(),
                )),
                1 => Ok(1),
                _ => elbow_dimension(&nonzero),
            }
        }
    }
}

struct PreparedPopulation {
    means: MeanResponseSet,
    gamma: Matrix,
    kind: PopulationKind,
}

enum PopulationKind {
    Bernoulli(BernoulliPopulation),
    Gaussian(GaussianPopulation),
}

fn prepare_population(
    cfg: &SimulationConfig,
    n: usize,
    attempt: u64,
) -> Result<PreparedPopulation> {
    if let Some(ref pop) = cfg.population_override {
        if pop.n() != n || pop.m() != cfg.m {
            return Err(Error::Validation(
                "population override shape does not match the config".into(),
            ));
        }
        return Ok(PreparedPopulation {
            means: pop.means(),
            gamma: gamma_of_bernoulli(pop),
            kind: PopulationKind::Bernoulli(pop.clone()),
        });
    }
    let seed = derive_seed(cfg.seed, &[n as u64, 0, attempt]);
    if let Some(spec) = cfg.gaussian {
        let pop = gaussian_population(n, cfg.m, spec.p, spec.sigma, seed)?;
        let gamma = Matrix::new(
            n,
            cfg.m,
            vec![spec.p as f64 * spec.sigma * spec.sigma; n * cfg.m],
        )?;
        Ok(PreparedPopulation { means: pop.means.clone(), gamma, kind: PopulationKind::Gaussian(pop) })
    } else {
        let pop = bernoulli_population(n, cfg.m, seed)?;
        Ok(PreparedPopulation {
            means: pop.means(),
            gamma: gamma_of_bernoulli(&pop),
            kind: PopulationKind::Bernoulli(pop),
        })
    }
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))
}

/// Runs the simulated coverage experiment: for each n, build a population,
/// embed it, evaluate the error bound, then measure the aligned estimation
/// error on `mc_samples` independent replicate draws.
pub fn coverage_experiment(cfg: &SimulationConfig) -> Result<CoverageReport> {
    if cfg.mc_samples < 1 {
        return Err(Error::Validation("mc_samples must be at least 1".into()));
    }
    if cfg.n_list.is_empty() {
        return Err(Error::Validation("n_list must not be empty".into()));
    }
    if cfg.population_override.is_some() && cfg.n_list.len() != 1 {
        return Err(Error::Validation(
            "population override requires a single n".into(),
        ));
    }
    let pool = build_pool(cfg.threads)?;

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &n in &cfg.n_list {
        let r = cfg.r_rule.replicates(n);

        // population, retrying degenerate draws on fresh sub-seeds
        let max_attempts = if cfg.population_override.is_some() { 1 } else { 10 };
        let mut prepared = None;
        let mut last_err = None;
        for attempt in 0..max_attempts {
            let cand = prepare_population(cfg, n, attempt)?;
            let delta_mat = dissimilarity_matrix(&cand.means, cfg.convention);
            match cmds_embed_full(delta_mat.matrix(), 1) {
                Ok(_) => {
                    prepared = Some(cand);
                    break;
                }
                Err(Error::DegenerateEmbedding(msg)) => {
                    last_err = Some(Error::DegenerateEmbedding(msg));
                }
                Err(e) => return Err(e),
            }
        }
        let prepared = prepared.ok_or_else(|| {
            last_err.unwrap_or_else(|| {
                Error::DegenerateEmbedding("population generation failed".into())
            })
        })?;

        // population embedding and bound
        let delta_mat = dissimilarity_matrix(&prepared.means, cfg.convention);
        let b = delta_mat.matrix().hadamard_pow(2.0)?.double_center()?;
        let dec = sym_eig(&b)?;
        let d = select_dimension(dec.eigenvalues(), cfg.d_rule)?;
        let psi = embed_from_decomposition(&dec, d)?;
        let params = BoundParams {
            n,
            m: cfg.m,
            r,
            d,
            delta: cfg.delta,
            lambda_1: dec.eigenvalues()[0].abs(),
            lambda_d: dec.eigenvalues()[d - 1].abs(),
            gamma: prepared.gamma.clone(),
        };
        let upper_bound = embedding_error_bound(&params)?;

        // Monte-Carlo samples, each on its own derived stream
        let cfg_ref = &cfg;
        let kind = &prepared.kind;
        let psi_coords = psi.coords();
        let errs: Vec<SampleError> = pool.install(|| {
            (0..cfg.mc_samples)
                .into_par_iter()
                .map(|b_id| -> Result<SampleError> {
                    let seed = derive_seed(cfg_ref.seed, &[n as u64, 1, b_id as u64]);
                    let means_hat = match kind {
                        PopulationKind::Bernoulli(pop) => sample_means(pop, r, seed)?,
                        PopulationKind::Gaussian(pop) => gaussian_sample_means(pop, r, seed)?,
                    };
                    let d_hat = dissimilarity_matrix(&means_hat, cfg_ref.convention);
                    let (emb, _) = cmds_embed_full(d_hat.matrix(), d)?;
                    let align = procrustes_align(emb.coords(), psi_coords)?;
                    Ok(SampleError {
                        n,
                        sample_id: b_id,
                        frob_err: align.frob_err,
                        spec_err: align.spec_err,
                        two_inf_err: align.two_inf_err,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let avg = errs.iter().map(|s| cfg.norm.pick(s)).sum::<f64>() / errs.len() as f64;
        let covered = errs.iter().filter(|s| cfg.norm.pick(s) <= upper_bound).count();
        rows.push(CoverageRow {
            n,
            m: cfg.m,
            r,
            d,
            avg_min_error: avg,
            upper_bound,
            coverage: covered as f64 / errs.len() as f64,
            mc_samples: cfg.mc_samples,
            delta: cfg.delta,
            norm: cfg.norm.name().into(),
            seed: cfg.seed,
        });
        samples.extend(errs);
    }
    Ok(CoverageReport { rows, samples })
}

/// Draws `r_out` replicates per cell uniformly with replacement from the
/// pool, materializing the resampled tensor. Index draws consume the seeded
/// stream in ascending (i, j, k) order.
pub fn bootstrap_resample(pool: &ResponseTensor, r_out: u64, seed: u64) -> Result<ResponseTensor> {
    if r_out < 1 {
        return Err(Error::Validation("r_out must be at least 1".into()));
    }
    let r_out_us = usize::try_from(r_out)
        .map_err(|_| Error::Validation("r_out too large to materialize".into()))?;
    let mut rng = rng_from(seed);
    let (n, m, r, p) = (pool.n(), pool.m(), pool.r(), pool.p());
    let mut values = Vec::with_capacity(n * m * r_out_us * p);
    for i in 0..n {
        for j in 0..m {
            for _ in 0..r_out_us {
                let idx = rng.random_range(0..r);
                values.extend_from_slice(pool.response(i, j, idx));
            }
        }
    }
    ResponseTensor::new(n, m, r_out_us, p, values)
}

/// Mean responses of a bootstrap resample without materializing it: draws
/// the identical index stream as [`bootstrap_resample`] and accumulates in
/// the same order, so the result is bit-identical to
/// `mean_responses(&bootstrap_resample(pool, r_out, seed)?)`.
pub fn bootstrap_resampled_means(
    pool: &ResponseTensor,
    r_out: u64,
    seed: u64,
) -> Result<MeanResponseSet> {
    if r_out < 1 {
        return Err(Error::Validation("r_out must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let (n, m, r, p) = (pool.n(), pool.m(), pool.r(), pool.p());
    let rf = r_out as f64;
    let mut means = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Matrix::zeros(m, p);
        for j in 0..m {
            for _ in 0..r_out {
                let idx = rng.random_range(0..r);
                let resp = pool.response(i, j, idx);
                for (l, &v) in resp.iter().enumerate() {
                    acc.set(j, l, acc.get(j, l) + v);
                }
            }
            for l in 0..p {
                acc.set(j, l, acc.get(j, l) / rf);
            }
        }
        means.push(acc);
    }
    MeanResponseSet::new(means)
}

/// Configuration of the bootstrap coverage experiment.
#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub r_out: u64,
    pub mc_samples: usize,
    pub delta: f64,
    pub d_rule: DRule,
    pub seed: u64,
    pub convention: Dissimilarity,
    pub norm: ErrorNorm,
    pub threads: Option<usize>,
}

/// Bootstrap coverage over an ingested response pool: the pool means act as
/// the proxy population; each Monte-Carlo sample resamples r_out replicates
/// per cell, embeds them, aligns to the proxy embedding, and compares the
/// error to the bound.
pub fn bootstrap_coverage(
    pool_tensor: &ResponseTensor,
    cfg: &BootstrapConfig,
) -> Result<CoverageReport> {
    if cfg.mc_samples < 1 {
        return Err(Error::Validation("mc_samples must be at least 1".into()));
    }
    let n = pool_tensor.n();
    let mu_star = mean_responses(pool_tensor);
    let delta_mat = dissimilarity_matrix(&mu_star, cfg.convention);
    let b = delta_mat.matrix().hadamard_pow(2.0)?.double_center()?;
    let dec = sym_eig(&b)?;
    let d = select_dimension(dec.eigenvalues(), cfg.d_rule)?;
    let psi_star = embed_from_decomposition(&dec, d)?;
    let params = BoundParams {
        n,
        m: pool_tensor.m(),
        r: cfg.r_out,
        d,
        delta: cfg.delta,
        lambda_1: dec.eigenvalues()[0].abs(),
        lambda_d: dec.eigenvalues()[d - 1].abs(),
        gamma: Matrix::zeros(n, pool_tensor.m()),
    };
    let upper_bound = embedding_error_bound(&params)?;

    let pool = build_pool(cfg.threads)?;
    let psi_coords = psi_star.coords();
    let errs: Vec<SampleError> = pool.install(|| {
        (0..cfg.mc_samples)
            .into_par_iter()
            .map(|b_id| -> Result<SampleError> {
                let seed = derive_seed(cfg.seed, &[n as u64, 2, b_id as u64]);
                let means_hat = bootstrap_resampled_means(pool_tensor, cfg.r_out, seed)?;
                let d_hat = dissimilarity_matrix(&means_hat, cfg.convention);
                let (emb, _) = cmds_embed_full(d_hat.matrix(), d)?;
                let align = procrustes_align(emb.coords(), psi_coords)?;
                Ok(SampleError {
                    n,
                    sample_id: b_id,
                    frob_err: align.frob_err,
                    spec_err: align.spec_err,
                    two_inf_err: align.two_inf_err,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let avg = errs.iter().map(|s| cfg.norm.pick(s)).sum::<f64>() / errs.len() as f64;
    let covered = errs.iter().filter(|s| cfg.norm.pick(s) <= upper_bound).count();
    Ok(CoverageReport {
        rows: vec![CoverageRow {
            n,
            m: pool_tensor.m(),
            r: cfg.r_out,
            d,
            avg_min_error: avg,
            upper_bound,
            coverage: covered as f64 / errs.len() as f64,
            mc_samples: cfg.mc_samples,
            delta: cfg.delta,
            norm: cfg.norm.name().into(),
            seed: cfg.seed,
        }],
        samples: errs,
    })
}
