//! Response-vector ingestion and report/embedding persistence.
//!
//! File formats:
//!
//! * responses (CSV): header `model_id,query_id,replicate_id,v_0,...,v_{p-1}`;
//!   ids are arbitrary strings, remapped to dense 0-based indices in order of
//!   first appearance. Every (model, query) cell must carry the same number
//!   of replicates.
//! * responses (JSONL): one object per line with `model_id`, `query_id`,
//!   `replicate_id`, and a `vector` array.
//! * coverage report: `report.csv` with header
//!   `n,m,r,d,avg_min_error,upper_bound,coverage,mc_samples,delta,norm,seed`,
//!   `samples.csv` with header `n,sample_id,frob_err,spec_err,two_inf_err`,
//!   and `report.json` carrying the same rows.
//! * embedding: `embedding.csv` with header `model_id,c_0,...,c_{d-1}` plus
//!   an `embedding.json` sidecar with eigenvalues, signature and warnings.
//!
//! Floats are serialized in CSV with 17 significant digits so a write/read
//! cycle reproduces every value bit-exactly; JSON relies on serde_json's
//! shortest round-trip encoding.

use crate::cmds::Embedding;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::montecarlo::{CoverageReport, CoverageRow, SampleError};
use crate::pipeline::ResponseTensor;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// 17-significant-digit scientific notation (round-trip safe for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Input format of a responses file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseFormat {
    Csv,
    Jsonl,
}

impl ResponseFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ResponseFormat::Csv),
            "jsonl" => Ok(ResponseFormat::Jsonl),
            other => Err(Error::Validation(format!(
                "unknown responses format '{other}' (expected csv|jsonl)"
            ))),
        }
    }

    /// Guess from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => ResponseFormat::Jsonl,
            _ => ResponseFormat::Csv,
        }
    }
}

/// Dense-id remapping produced at ingestion: external id of model i is
/// `models[i]`, of query j `queries[j]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdMaps {
    pub models: Vec<String>,
    pub queries: Vec<String>,
}

impl IdMaps {
    /// Plain 0..n-1 / 0..m-1 labels for tensors born in memory.
    pub fn numeric(n: usize, m: usize) -> Self {
        IdMaps {
            models: (0..n).map(|i| i.to_string()).collect(),
            queries: (0..m).map(|j| j.to_string()).collect(),
        }
    }
}

struct RawRow {
    line: usize,
    model: String,
    query: String,
    replicate: String,
    values: Vec<f64>,
}

/// Reads a responses file into a dense tensor plus the id remapping table.
pub fn ingest_responses(path: &Path, format: ResponseFormat) -> Result<(ResponseTensor, IdMaps)> {
    let rows = match format {
        ResponseFormat::Csv => read_csv_rows(path)?,
        ResponseFormat::Jsonl => read_jsonl_rows(path)?,
    };
    assemble_tensor(rows)
}

fn read_csv_rows(path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Ingestion(format!("missing required column '{name}'")))
    };
    let model_col = col("model_id")?;
    let query_col = col("query_id")?;
    let rep_col = col("replicate_id")?;
    let mut vec_cols = Vec::new();
    loop {
        let name = format!("v_{}", vec_cols.len());
        match headers.iter().position(|h| h == name) {
            Some(idx) => vec_cols.push(idx),
            None => break,
        }
    }
    if vec_cols.is_empty() {
        return Err(Error::Ingestion("no vector columns v_0..v_{p-1} found".into()));
    }

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record?;
        let mut values = Vec::with_capacity(vec_cols.len());
        for &c in &vec_cols {
            let field = record.get(c).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                Error::Ingestion(format!(
                    "line {line}: non-numeric vector field '{field}' in column v_{}",
                    values.len()
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion(format!("line {line}: non-finite value {v}")));
            }
            values.push(v);
        }
        rows.push(RawRow {
            line,
            model: record.get(model_col).unwrap_or("").to_string(),
            query: record.get(query_col).unwrap_or("").to_string(),
            replicate: record.get(rep_col).unwrap_or("").to_string(),
            values,
        });
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct JsonlRow {
    model_id: serde_json::Value,
    query_id: serde_json::Value,
    replicate_id: serde_json::Value,
    vector: Vec<f64>,
}

fn json_id(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<RawRow>> {
    let file = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line)
            .map_err(|e| Error::Ingestion(format!("line {lineno}: {e}")))?;
        if row.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ingestion(format!("line {lineno}: non-finite vector value")));
        }
        rows.push(RawRow {
            line: lineno,
            model: json_id(&row.model_id),
            query: json_id(&row.query_id),
            replicate: json_id(&row.replicate_id),
            values: row.vector,
        });
    }
    Ok(rows)
}

fn assemble_tensor(rows: Vec<RawRow>) -> Result<(ResponseTensor, IdMaps)> {
    if rows.is_empty() {
        return Err(Error::Ingestion("no response rows found".into()));
    }
    let p = rows[0].values.len();
    let mut models: Vec<String> = Vec::new();
    let mut queries: Vec<String> = Vec::new();
    let mut model_idx: HashMap<String, usize> = HashMap::new();
    let mut query_idx: HashMap<String, usize> = HashMap::new();
    // cell (i, j) -> replicates in file order, with the external replicate
    // ids kept around to reject duplicates
    let mut cells: HashMap<(usize, usize), Vec<(String, Vec<f64>)>> = HashMap::new();

    for row in rows {
        if row.values.len() != p {
            return Err(Error::Ingestion(format!(
                "line {}: vector length {} differs from first row's {p}",
                row.line,
                row.values.len()
            )));
        }
        let i = *model_idx.entry(row.model.clone()).or_insert_with(|| {
            models.push(row.model.clone());
            models.len() - 1
        });
        let j = *query_idx.entry(row.query.clone()).or_insert_with(|| {
            queries.push(row.query.clone());
            queries.len() - 1
        });
        let cell = cells.entry((i, j)).or_default();
        if cell.iter().any(|(rep, _)| *rep == row.replicate) {
            return Err(Error::Ingestion(format!(
                "line {}: duplicate replicate id '{}' in cell ({}, {})",
                row.line, row.replicate, row.model, row.query
            )));
        }
        cell.push((row.replicate, row.values));
    }

    let n = models.len();
    let m = queries.len();
    if n < 2 {
        return Err(Error::Ingestion(format!("need at least 2 models, found {n}")));
    }
    let r = cells.get(&(0, 0)).map(|c| c.len()).unwrap_or(0);
    for i in 0..n {
        for j in 0..m {
            match cells.get(&(i, j)) {
                None => {
                    return Err(Error::Ingestion(format!(
                        "missing cell: model '{}' has no responses for query '{}'",
                        models[i], queries[j]
                    )))
                }
                Some(c) if c.len() != r => {
                    return Err(Error::Ingestion(format!(
                        "ragged replicate counts: cell (model '{}', query '{}') has {} \
                         replicates, expected {r}",
                        models[i],
                        queries[j],
                        c.len()
                    )))
                }
                _ => {}
            }
        }
    }

    let mut values = Vec::with_capacity(n * m * r * p);
    for i in 0..n {
        for j in 0..m {
            for (_, v) in &cells[&(i, j)] {
                values.extend_from_slice(v);
            }
        }
    }
    Ok((ResponseTensor::new(n, m, r, p, values)?, IdMaps { models, queries }))
}

/// Writes a responses CSV that [`ingest_responses`] reads back to the same
/// tensor (replicate ids are densified to 0..r-1).
pub fn write_responses(tensor: &ResponseTensor, ids: &IdMaps, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model_id".to_string(), "query_id".into(), "replicate_id".into()];
    for l in 0..tensor.p() {
        header.push(format!("v_{l}"));
    }
    w.write_record(&header)?;
    for i in 0..tensor.n() {
        for j in 0..tensor.m() {
            for k in 0..tensor.r() {
                let mut record = vec![
                    ids.models[i].clone(),
                    ids.queries[j].clone(),
                    k.to_string(),
                ];
                record.extend(tensor.response(i, j, k).iter().map(|&v| fmt_f64(v)));
                w.write_record(&record)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

const REPORT_HEADER: [&str; 11] = [
    "n", "m", "r", "d", "avg_min_error", "upper_bound", "coverage", "mc_samples", "delta",
    "norm", "seed",
];

const SAMPLES_HEADER: [&str; 5] = ["n", "sample_id", "frob_err", "spec_err", "two_inf_err"];

/// Writes the coverage rows as CSV (header-only when the report is empty).
pub fn write_report_csv(report: &CoverageReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for row in &report.rows {
        w.write_record(&[
            row.n.to_string(),
            row.m.to_string(),
            row.r.to_string(),
            row.d.to_string(),
            fmt_f64(row.avg_min_error),
            fmt_f64(row.upper_bound),
            fmt_f64(row.coverage),
            row.mc_samples.to_string(),
            fmt_f64(row.delta),
            row.norm.clone(),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a report CSV written by [`write_report_csv`].
pub fn read_report_csv(path: &Path) -> Result<Vec<CoverageRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let parse_err = |f: &str| Error::Ingestion(format!("bad report field '{f}'"));
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        rows.push(CoverageRow {
            n: field(0).parse().map_err(|_| parse_err(field(0)))?,
            m: field(1).parse().map_err(|_| parse_err(field(1)))?,
            r: field(2).parse().map_err(|_| parse_err(field(2)))?,
            d: field(3).parse().map_err(|_| parse_err(field(3)))?,
            avg_min_error: field(4).parse().map_err(|_| parse_err(field(4)))?,
            upper_bound: field(5).parse().map_err(|_| parse_err(field(5)))?,
            coverage: field(6).parse().map_err(|_| parse_err(field(6)))?,
            mc_samples: field(7).parse().map_err(|_| parse_err(field(7)))?,
            delta: field(8).parse().map_err(|_| parse_err(field(8)))?,
            norm: field(9).to_string(),
            seed: field(10).parse().map_err(|_| parse_err(field(10)))?,
        });
    }
    Ok(rows)
}

/// Writes the per-sample error log (one row per Monte-Carlo sample).
pub fn write_sample_log(report: &CoverageReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SAMPLES_HEADER)?;
    for s in &report.samples {
        w.write_record(&[
            s.n.to_string(),
            s.sample_id.to_string(),
            fmt_f64(s.frob_err),
            fmt_f64(s.spec_err),
            fmt_f64(s.two_inf_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a sample log written by [`write_sample_log`].
pub fn read_sample_log(path: &Path) -> Result<Vec<SampleError>> {
    let mut reader = csv::Reader::from_path(path)?;
    let parse_err = |f: &str| Error::Ingestion(format!("bad sample field '{f}'"));
    let mut out = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        out.push(SampleError {
            n: field(0).parse().map_err(|_| parse_err(field(0)))?,
            sample_id: field(1).parse().map_err(|_| parse_err(field(1)))?,
            frob_err: field(2).parse().map_err(|_| parse_err(field(2)))?,
            spec_err: field(3).parse().map_err(|_| parse_err(field(3)))?,
            two_inf_err: field(4).parse().map_err(|_| parse_err(field(4)))?,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportJson<'a> {
    rows: &'a [CoverageRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
}

/// Writes the report as JSON; `timestamp` adds a `generated_at_unix` field
/// (omit it for byte-reproducible output).
pub fn write_report_json(report: &CoverageReport, path: &Path, timestamp: Option<u64>) -> Result<()> {
    let doc = ReportJson { rows: &report.rows, generated_at_unix: timestamp };
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &doc)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct EmbeddingSidecar {
    n: usize,
    d: usize,
    eigenvalues: Vec<f64>,
    signature: crate::eig::Signature,
    warnings: crate::cmds::EmbeddingWarnings,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_eigenvalues: Option<usize>,
}

/// Writes `embedding.csv` (model_id, c_0..c_{d-1}) and the `embedding.json`
/// sidecar into `dir`.
pub fn write_embedding(embedding: &Embedding, ids: &IdMaps, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("embedding.csv"))?;
    let mut header = vec!["model_id".to_string()];
    for k in 0..embedding.dim() {
        header.push(format!("c_{k}"));
    }
    w.write_record(&header)?;
    for i in 0..embedding.n() {
        let mut record = vec![ids.models[i].clone()];
        record.extend(embedding.point(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&record)?;
    }
    w.flush()?;

    let q = embedding.signature().q;
    let sidecar = EmbeddingSidecar {
        n: embedding.n(),
        d: embedding.dim(),
        eigenvalues: embedding.eigvals().to_vec(),
        signature: embedding.signature(),
        warnings: embedding.warnings(),
        negative_eigenvalues: (q > 0).then_some(q),
    };
    let mut file = fs::File::create(dir.join("embedding.json"))?;
    serde_json::to_writer_pretty(&mut file, &sidecar)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Reads an embedding CSV (as written by [`write_embedding`]) back into the
/// coordinate matrix and the model ids.
pub fn read_embedding_csv(path: &Path) -> Result<(Matrix, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let d = reader.headers()?.len().saturating_sub(1);
    if d == 0 {
        return Err(Error::Ingestion("embedding file has no coordinate columns".into()));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let rec = record?;
        ids.push(rec.get(0).unwrap_or("").to_string());
        for c in 1..=d {
            let field = rec.get(c).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                Error::Ingestion(format!("line {}: non-numeric coordinate '{field}'", idx + 2))
            })?;
            data.push(v);
        }
    }
    if ids.is_empty() {
        return Err(Error::Ingestion("embedding file has no rows".into()));
    }
    Ok((Matrix::new(ids.len(), d, data)?, ids))
}

/// Reads a headerless numeric CSV as a matrix (used for the doubly centered
/// inputs of the diagnostics command).
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let rec = record?;
        let mut row = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Ingestion(format!("line {}: non-numeric entry '{field}'", idx + 1))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Ingestion("matrix file is empty".into()));
    }
    Matrix::from_rows(&rows)
}

/// Writes a matrix as headerless CSV with full-precision floats.
pub fn write_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.rows() {
        let record: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
