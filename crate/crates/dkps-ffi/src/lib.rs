//! C ABI over the core embedding and bound computations.
//!
//! Conventions:
//!
//! * Handles (`DkpsTensor`, `DkpsEmbedding`) are opaque; create/free pairs
//!   own them. Passing a handle to any function after freeing it is
//!   undefined behaviour, as usual for C APIs.
//! * Every fallible call returns a [`DkpsStatus`]; on failure the
//!   thread-local message from [`dkps_last_error_message`] describes what
//!   went wrong.
//! * Matrices cross the boundary as row-major `double` buffers that the
//!   caller allocates.
//!
//! The header `include/dkps.h` is generated with cbindgen (see
//! `cbindgen.toml`).

use dkps_core::pipeline::{dkps_embed, Dissimilarity, ResponseTensor};
use dkps_core::{
    embedding_error_bound_at, entrywise_concentration_prob, error_bound_coeffs,
    perspective_test, procrustes_align, spectral_noise_threshold, DkpsOutput, Error, Matrix,
};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::slice;

/// Status code of every fallible call (mirrors the CLI exit codes).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkpsStatus {
    Ok = 0,
    /// Invalid input: shapes, parameter ranges, degenerate spectra.
    Validation = 2,
    /// An iterative kernel failed to converge.
    Numerical = 3,
    /// File-system failure (unused by the in-memory API, reserved).
    Io = 4,
    /// A required pointer argument was null.
    NullPointer = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DkpsStatus {
    match err.exit_code() {
        3 => DkpsStatus::Numerical,
        4 => DkpsStatus::Io,
        _ => DkpsStatus::Validation,
    }
}

fn fail(err: Error) -> DkpsStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn null_arg(name: &str) -> DkpsStatus {
    set_error(&format!("null pointer argument: {name}"));
    DkpsStatus::NullPointer
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dkps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Owned response tensor: n models x m queries x r replicates of p-vectors.
pub struct DkpsTensor {
    inner: ResponseTensor,
}

/// Owned embedding result (coordinates, retained spectrum, intermediates).
pub struct DkpsEmbedding {
    inner: DkpsOutput,
}

/// Builds a tensor from a row-major buffer of length n*m*r*p laid out as
/// values[((i*m + j)*r + k)*p + l]. Copies the data.
#[no_mangle]
pub unsafe extern "C" fn dkps_tensor_new(
    n: usize,
    m: usize,
    r: usize,
    p: usize,
    values: *const f64,
    out: *mut *mut DkpsTensor,
) -> DkpsStatus {
    if out.is_null() {
        return null_arg("out");
    }
    if values.is_null() {
        return null_arg("values");
    }
    let len = n
        .checked_mul(m)
        .and_then(|v| v.checked_mul(r))
        .and_then(|v| v.checked_mul(p));
    let Some(len) = len else {
        set_error("tensor shape overflows");
        return DkpsStatus::Validation;
    };
    let data = slice::from_raw_parts(values, len).to_vec();
    match ResponseTensor::new(n, m, r, p, data) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(DkpsTensor { inner }));
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Frees a tensor handle (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn dkps_tensor_free(tensor: *mut DkpsTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Runs the embedding pipeline at dimension `dim`. `plain_dissimilarity`
/// selects the convention: 0 = root (default), nonzero = plain.
#[no_mangle]
pub unsafe extern "C" fn dkps_embed_tensor(
    tensor: *const DkpsTensor,
    dim: usize,
    plain_dissimilarity: c_int,
    out: *mut *mut DkpsEmbedding,
) -> DkpsStatus {
    if tensor.is_null() {
        return null_arg("tensor");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let convention = if plain_dissimilarity != 0 {
        Dissimilarity::Plain
    } else {
        Dissimilarity::Root
    };
    match dkps_embed(&(*tensor).inner, dim, convention) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(DkpsEmbedding { inner }));
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Frees an embedding handle (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_free(embedding: *mut DkpsEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// Number of embedded models.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_n(embedding: *const DkpsEmbedding) -> usize {
    if embedding.is_null() {
        return 0;
    }
    (*embedding).inner.embedding.n()
}

/// Embedding dimension.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_dim(embedding: *const DkpsEmbedding) -> usize {
    if embedding.is_null() {
        return 0;
    }
    (*embedding).inner.embedding.dim()
}

/// Copies the n x d coordinate matrix (row-major) into `out`.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_coords(
    embedding: *const DkpsEmbedding,
    out: *mut f64,
) -> DkpsStatus {
    if embedding.is_null() {
        return null_arg("embedding");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let coords = (*embedding).inner.embedding.coords();
    let dst = slice::from_raw_parts_mut(out, coords.rows() * coords.cols());
    dst.copy_from_slice(coords.as_slice());
    DkpsStatus::Ok
}

/// Copies the d retained eigenvalues (magnitude-descending) into `out`.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_eigenvalues(
    embedding: *const DkpsEmbedding,
    out: *mut f64,
) -> DkpsStatus {
    if embedding.is_null() {
        return null_arg("embedding");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let vals = (*embedding).inner.embedding.eigvals();
    let dst = slice::from_raw_parts_mut(out, vals.len());
    dst.copy_from_slice(vals);
    DkpsStatus::Ok
}

/// Copies the n x n dissimilarity matrix (row-major) into `out`.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_dissimilarity(
    embedding: *const DkpsEmbedding,
    out: *mut f64,
) -> DkpsStatus {
    if embedding.is_null() {
        return null_arg("embedding");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let m = (*embedding).inner.dissimilarity.matrix();
    let dst = slice::from_raw_parts_mut(out, m.rows() * m.cols());
    dst.copy_from_slice(m.as_slice());
    DkpsStatus::Ok
}

/// Writes the retained-spectrum signature: `p_out` positive and `q_out`
/// negative eigenvalue counts.
#[no_mangle]
pub unsafe extern "C" fn dkps_embedding_signature(
    embedding: *const DkpsEmbedding,
    p_out: *mut usize,
    q_out: *mut usize,
) -> DkpsStatus {
    if embedding.is_null() {
        return null_arg("embedding");
    }
    if p_out.is_null() || q_out.is_null() {
        return null_arg("p_out/q_out");
    }
    let sig = (*embedding).inner.embedding.signature();
    *p_out = sig.p;
    *q_out = sig.q;
    DkpsStatus::Ok
}

/// Orthogonal-alignment residual norms between two n x d configurations
/// (row-major buffers). Any of the three output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn dkps_alignment_errors(
    psi_hat: *const f64,
    psi: *const f64,
    n: usize,
    d: usize,
    frob_out: *mut f64,
    spec_out: *mut f64,
    two_inf_out: *mut f64,
) -> DkpsStatus {
    if psi_hat.is_null() {
        return null_arg("psi_hat");
    }
    if psi.is_null() {
        return null_arg("psi");
    }
    let Some(len) = n.checked_mul(d) else {
        set_error("configuration shape overflows");
        return DkpsStatus::Validation;
    };
    let a = match Matrix::new(n, d, slice::from_raw_parts(psi_hat, len).to_vec()) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let b = match Matrix::new(n, d, slice::from_raw_parts(psi, len).to_vec()) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    match procrustes_align(&a, &b) {
        Ok(res) => {
            if !frob_out.is_null() {
                *frob_out = res.frob_err;
            }
            if !spec_out.is_null() {
                *spec_out = res.spec_err;
            }
            if !two_inf_out.is_null() {
                *two_inf_out = res.two_inf_err;
            }
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The spectral noise threshold (n^3/r)^(1/2 - delta).
#[no_mangle]
pub unsafe extern "C" fn dkps_spectral_threshold(
    n: usize,
    r: u64,
    delta: f64,
    out: *mut f64,
) -> DkpsStatus {
    if out.is_null() {
        return null_arg("out");
    }
    match spectral_noise_threshold(n, r, delta) {
        Ok(v) => {
            *out = v;
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The cubic bound coefficients; `coeffs_out` receives C0..C3.
#[no_mangle]
pub unsafe extern "C" fn dkps_error_bound_coeffs(
    lambda_1: f64,
    lambda_d: f64,
    d: usize,
    coeffs_out: *mut f64,
) -> DkpsStatus {
    if coeffs_out.is_null() {
        return null_arg("coeffs_out");
    }
    match error_bound_coeffs(lambda_1, lambda_d, d) {
        Ok(c) => {
            let dst = slice::from_raw_parts_mut(coeffs_out, 4);
            dst.copy_from_slice(&[c.c0, c.c1, c.c2, c.c3]);
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The uniform error bound at the threshold implied by (n, r, delta).
#[no_mangle]
pub unsafe extern "C" fn dkps_error_bound(
    lambda_1: f64,
    lambda_d: f64,
    d: usize,
    n: usize,
    r: u64,
    delta: f64,
    out: *mut f64,
) -> DkpsStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let x = match spectral_noise_threshold(n, r, delta) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    match embedding_error_bound_at(lambda_1, lambda_d, d, x) {
        Ok(v) => {
            *out = v;
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Lower bound on the probability that every centered-matrix entry deviates
/// by less than eps.
#[no_mangle]
pub unsafe extern "C" fn dkps_entrywise_prob(
    gamma_sum: f64,
    n: usize,
    m: usize,
    r: u64,
    eps: f64,
    out: *mut f64,
) -> DkpsStatus {
    if out.is_null() {
        return null_arg("out");
    }
    match entrywise_concentration_prob(gamma_sum, n, m, r, eps) {
        Ok(v) => {
            *out = v;
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Perspective difference test: writes the statistic and sets `reject_out`
/// to 1 iff ||a - b|| strictly exceeds 2 kappa.
#[no_mangle]
pub unsafe extern "C" fn dkps_perspective_test(
    a: *const f64,
    b: *const f64,
    len: usize,
    kappa: f64,
    statistic_out: *mut f64,
    reject_out: *mut c_int,
) -> DkpsStatus {
    if a.is_null() {
        return null_arg("a");
    }
    if b.is_null() {
        return null_arg("b");
    }
    let av = slice::from_raw_parts(a, len);
    let bv = slice::from_raw_parts(b, len);
    match perspective_test(av, bv, kappa) {
        Ok(t) => {
            if !statistic_out.is_null() {
                *statistic_out = t.statistic;
            }
            if !reject_out.is_null() {
                *reject_out = t.reject as c_int;
            }
            DkpsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn dkps_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}
