//! Command-line front end: embedding runs, bound evaluation, coverage
//! experiments, perturbation diagnostics, and the perspective test.
//!
//! Exit codes: 0 ok, 2 validation/domain error, 3 numerical error, 4 I/O
//! error. Every failure prints a single machine-parsable line to stderr of
//! the form `E<code>: <message>`. The `DKPS_THREADS` environment variable
//! caps the worker count of the experiment commands (default: all cores).

use clap::{Args, Parser, Subcommand};
use dkps_core::bounds::diagnostics::remainder_diagnostics;
use dkps_core::bounds::{
    embedding_error_bound_at, entrywise_concentration_prob, error_bound_coeffs,
    spectral_noise_threshold, BoundParams,
};
use dkps_core::io::{
    ingest_responses, read_embedding_csv, read_matrix_csv, write_embedding, write_matrix_csv,
    write_report_csv, write_report_json, write_sample_log, IdMaps, ResponseFormat,
};
use dkps_core::montecarlo::{
    bootstrap_coverage, coverage_experiment, BootstrapConfig, DRule, ErrorNorm, GaussianSpec,
    RRule, SimulationConfig,
};
use dkps_core::pipeline::{dkps_embed, mean_responses, population_embed, Dissimilarity};
use dkps_core::{perspective_test, Error, Matrix, Result};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "dkps",
    about = "Perspective-space embeddings of generative models, error bounds, and coverage experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputOpts {
    /// Output directory for report files.
    #[arg(long)]
    out: PathBuf,
    /// Omit the generated_at_unix field so report files are byte-reproducible.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a response tensor (sample path) and write all intermediates.
    Embed {
        /// Responses file: CSV (model_id,query_id,replicate_id,v_0..) or JSONL.
        #[arg(long)]
        responses: PathBuf,
        /// File format; inferred from the extension when omitted.
        #[arg(long)]
        format: Option<String>,
        /// Embedding dimension.
        #[arg(long)]
        dim: usize,
        /// Dissimilarity convention: root (default) or plain.
        #[arg(long, default_value = "root")]
        dissimilarity: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed population means directly (a responses file; replicates in a
    /// cell are averaged).
    PopulationEmbed {
        #[arg(long)]
        means: PathBuf,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value = "root")]
        dissimilarity: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the concentration threshold, cubic coefficients, and the
    /// uniform error bound as JSON.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: u64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambdad: f64,
        #[arg(long)]
        dim: usize,
        /// Total trace variability; enables the entrywise probability output.
        #[arg(long)]
        gamma_sum: Option<f64>,
        /// Sweep delta over {0.05, 0.10, ..., 0.45} and report the minimum.
        #[arg(long)]
        sweep_delta: bool,
    },
    /// Simulated coverage experiment over binary-response populations.
    SimulateCoverage {
        /// Comma-separated model counts, e.g. 10,12,15,18,20.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Replicates per query: r = ceil(n^r_exp).
        #[arg(long, default_value_t = 5.5)]
        r_exp: f64,
        /// Monte-Carlo samples per n.
        #[arg(long, default_value_t = 100)]
        mc: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        /// Dimension rule: elbow (default) or fixed:K.
        #[arg(long, default_value = "elbow")]
        d_rule: String,
        /// Coverage norm: frobenius (default), spectral, or two-inf.
        #[arg(long, default_value = "frobenius")]
        norm: String,
        #[arg(long, default_value = "root")]
        dissimilarity: String,
        /// Extension: vector responses in R^p with Gaussian noise instead of
        /// scalar binary ones.
        #[arg(long)]
        p_dim: Option<usize>,
        /// Noise scale for --p-dim (default 0.5).
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Bootstrap coverage experiment over an ingested response pool.
    BootstrapCoverage {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        format: Option<String>,
        /// Replicates drawn per cell in each bootstrap sample.
        #[arg(long)]
        r_out: u64,
        #[arg(long, default_value_t = 100)]
        mc: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "elbow")]
        d_rule: String,
        #[arg(long, default_value = "frobenius")]
        norm: String,
        #[arg(long, default_value = "root")]
        dissimilarity: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Per-term perturbation diagnostics for a (B, B-hat) pair.
    Diagnose {
        /// Doubly centered population matrix (headerless CSV).
        #[arg(long)]
        b: PathBuf,
        /// Doubly centered sample matrix (headerless CSV).
        #[arg(long)]
        bhat: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Replicate count for the threshold-evaluated bounds; defaults to
        /// n^3 (threshold exactly 1).
        #[arg(long)]
        r: Option<u64>,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Test whether two embedded perspectives differ.
    TestPerspectives {
        /// Embedding CSV as written by the embed commands.
        #[arg(long)]
        embedding: PathBuf,
        /// Row index of the first perspective.
        #[arg(long)]
        i: usize,
        /// Row index of the second perspective.
        #[arg(long)]
        j: usize,
        #[arg(long)]
        kappa: f64,
    },
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("DKPS_THREADS") {
        Ok(v) => {
            let k: usize = v.parse().map_err(|_| {
                Error::Validation(format!("DKPS_THREADS must be a positive integer, got '{v}'"))
            })?;
            if k == 0 {
                return Err(Error::Validation("DKPS_THREADS must be at least 1".into()));
            }
            Ok(Some(k))
        }
        Err(_) => Ok(None),
    }
}

fn timestamp(no_timestamp: bool) -> Option<u64> {
    if no_timestamp {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    }
}

fn resolve_format(path: &PathBuf, format: &Option<String>) -> Result<ResponseFormat> {
    match format {
        Some(s) => ResponseFormat::parse(s),
        None => Ok(ResponseFormat::from_path(path)),
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_embed_outputs(
    out: &PathBuf,
    output: &dkps_core::DkpsOutput,
    ids: &IdMaps,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_embedding(&output.embedding, ids, out)?;
    write_matrix_csv(output.dissimilarity.matrix(), &out.join("dissimilarity.csv"))?;
    write_matrix_csv(&output.centered, &out.join("centered.csv"))?;
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Embed { responses, format, dim, dissimilarity, out } => {
            let format = resolve_format(&responses, &format)?;
            let convention = Dissimilarity::parse(&dissimilarity)?;
            let (tensor, ids) = ingest_responses(&responses, format)?;
            let result = dkps_embed(&tensor, dim, convention)?;
            write_embed_outputs(&out, &result, &ids)?;
            print_json(&json!({
                "n": tensor.n(),
                "m": tensor.m(),
                "r": tensor.r(),
                "p": tensor.p(),
                "d": dim,
                "dissimilarity": convention.name(),
                "negative_eigenvalues": result.embedding.signature().q,
                "out": out,
            }))
        }
        Command::PopulationEmbed { means, format, dim, dissimilarity, out } => {
            let format = resolve_format(&means, &format)?;
            let convention = Dissimilarity::parse(&dissimilarity)?;
            let (tensor, ids) = ingest_responses(&means, format)?;
            let mean_set = mean_responses(&tensor);
            let result = population_embed(&mean_set, dim, convention)?;
            write_embed_outputs(&out, &result, &ids)?;
            print_json(&json!({
                "n": tensor.n(),
                "m": tensor.m(),
                "p": tensor.p(),
                "d": dim,
                "dissimilarity": convention.name(),
                "out": out,
            }))
        }
        Command::Bound { n, m, r, delta, lambda1, lambdad, dim, gamma_sum, sweep_delta } => {
            let mut doc = bound_json(n, m, r, delta, lambda1, lambdad, dim, gamma_sum)?;
            if sweep_delta {
                let mut sweep = Vec::new();
                let mut best: Option<(f64, f64)> = None;
                for step in 1..=9 {
                    let dlt = step as f64 * 0.05;
                    let x = spectral_noise_threshold(n, r, dlt)?;
                    let u = embedding_error_bound_at(lambda1, lambdad, dim, x)?;
                    if best.map_or(true, |(_, bu)| u < bu) {
                        best = Some((dlt, u));
                    }
                    sweep.push(json!({"delta": dlt, "threshold": x, "bound": u}));
                }
                let (bd, bu) = best.expect("nonempty sweep");
                doc["sweep"] = json!(sweep);
                doc["min_bound"] = json!({"delta": bd, "bound": bu});
            }
            print_json(&doc)
        }
        Command::SimulateCoverage {
            n_list,
            m,
            r_exp,
            mc,
            delta,
            seed,
            d_rule,
            norm,
            dissimilarity,
            p_dim,
            sigma,
            output,
        } => {
            let cfg = SimulationConfig {
                n_list,
                m,
                r_rule: RRule::Exponent(r_exp),
                mc_samples: mc,
                delta,
                d_rule: DRule::parse(&d_rule)?,
                seed,
                convention: Dissimilarity::parse(&dissimilarity)?,
                norm: ErrorNorm::parse(&norm)?,
                threads: threads_from_env()?,
                population_override: None,
                gaussian: p_dim.map(|p| GaussianSpec { p, sigma }),
            };
            let report = coverage_experiment(&cfg)?;
            std::fs::create_dir_all(&output.out)?;
            write_report_csv(&report, &output.out.join("report.csv"))?;
            write_sample_log(&report, &output.out.join("samples.csv"))?;
            write_report_json(
                &report,
                &output.out.join("report.json"),
                timestamp(output.no_timestamp),
            )?;
            for row in &report.rows {
                println!(
                    "n={} d={} r={} avg_min_error={:.6e} upper_bound={:.6e} coverage={:.2}",
                    row.n, row.d, row.r, row.avg_min_error, row.upper_bound, row.coverage
                );
            }
            Ok(())
        }
        Command::BootstrapCoverage {
            responses,
            format,
            r_out,
            mc,
            delta,
            seed,
            d_rule,
            norm,
            dissimilarity,
            output,
        } => {
            let format = resolve_format(&responses, &format)?;
            let (pool, _ids) = ingest_responses(&responses, format)?;
            let cfg = BootstrapConfig {
                r_out,
                mc_samples: mc,
                delta,
                d_rule: DRule::parse(&d_rule)?,
                seed,
                convention: Dissimilarity::parse(&dissimilarity)?,
                norm: ErrorNorm::parse(&norm)?,
                threads: threads_from_env()?,
            };
            let report = bootstrap_coverage(&pool, &cfg)?;
            std::fs::create_dir_all(&output.out)?;
            write_report_csv(&report, &output.out.join("report.csv"))?;
            write_sample_log(&report, &output.out.join("samples.csv"))?;
            write_report_json(
                &report,
                &output.out.join("report.json"),
                timestamp(output.no_timestamp),
            )?;
            for row in &report.rows {
                println!(
                    "n={} d={} r={} avg_min_error={:.6e} upper_bound={:.6e} coverage={:.2}",
                    row.n, row.d, row.r, row.avg_min_error, row.upper_bound, row.coverage
                );
            }
            Ok(())
        }
        Command::Diagnose { b, bhat, dim, delta, r, m } => {
            let b_mat = read_matrix_csv(&b)?;
            let bhat_mat = read_matrix_csv(&bhat)?;
            let n = b_mat.rows();
            let dec = dkps_core::sym_eig(&b_mat)?;
            if dim == 0 || dim > n {
                return Err(Error::Dimension(format!("dim {dim} out of range for n = {n}")));
            }
            let params = BoundParams {
                n,
                m,
                r: r.unwrap_or((n as u64).pow(3)),
                d: dim,
                delta,
                lambda_1: dec.eigenvalues()[0].abs(),
                lambda_d: dec.eigenvalues()[dim - 1].abs(),
                gamma: Matrix::zeros(n, m),
            };
            let report = remainder_diagnostics(&b_mat, &bhat_mat, dim, &params)?;
            print_json(&serde_json::to_value(&report)?)
        }
        Command::TestPerspectives { embedding, i, j, kappa } => {
            let (coords, ids) = read_embedding_csv(&embedding)?;
            let n = coords.rows();
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "indices ({i}, {j}) out of range for {n} models"
                )));
            }
            let outcome = perspective_test(coords.row(i), coords.row(j), kappa)?;
            print_json(&json!({
                "model_i": ids[i],
                "model_j": ids[j],
                "statistic": outcome.statistic,
                "kappa": kappa,
                "decision": if outcome.reject { "REJECT" } else { "NO-EVIDENCE" },
            }))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bound_json(
    n: usize,
    m: usize,
    r: u64,
    delta: f64,
    lambda1: f64,
    lambdad: f64,
    dim: usize,
    gamma_sum: Option<f64>,
) -> Result<serde_json::Value> {
    let x = spectral_noise_threshold(n, r, delta)?;
    let coeffs = error_bound_coeffs(lambda1, lambdad, dim)?;
    let bound = coeffs.eval(x);
    let mut doc = json!({
        "n": n,
        "m": m,
        "r": r,
        "delta": delta,
        "lambda_1": lambda1,
        "lambda_d": lambdad,
        "d": dim,
        "threshold": x,
        "coeffs": coeffs,
        "bound": bound,
    });
    if let Some(g) = gamma_sum {
        // entrywise level eps = x / n implies the spectral deviation stays
        // below the threshold x
        let eps = x / n as f64;
        doc["entrywise_prob_at_threshold"] =
            json!(entrywise_concentration_prob(g, n, m, r, eps)?);
    }
    Ok(doc)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg = err.to_string().replace('\n', " ");
            eprintln!("E{}: {}", err.exit_code(), msg);
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
