/* C interface for the dkps embedding and bound computations. */

#ifndef DKPS_H
#define DKPS_H

/* Generated with cbindgen; regenerate with `cbindgen --config cbindgen.toml --crate dkps-ffi --output include/dkps.h`. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status code of every fallible call (mirrors the CLI exit codes).
typedef enum DkpsStatus {
  DKPS_STATUS_OK = 0,
  // Invalid input: shapes, parameter ranges, degenerate spectra.
  DKPS_STATUS_VALIDATION = 2,
  // An iterative kernel failed to converge.
  DKPS_STATUS_NUMERICAL = 3,
  // File-system failure (unused by the in-memory API, reserved).
  DKPS_STATUS_IO = 4,
  // A required pointer argument was null.
  DKPS_STATUS_NULL_POINTER = 5,
} DkpsStatus;

// Owned embedding result (coordinates, retained spectrum, intermediates).
typedef struct DkpsEmbedding DkpsEmbedding;

// Owned response tensor: n models x m queries x r replicates of p-vectors.
typedef struct DkpsTensor DkpsTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. The pointer
// stays valid until the next failing call on the same thread.
const char *dkps_last_error_message(void);

// Builds a tensor from a row-major buffer of length n*m*r*p laid out as
// values[((i*m + j)*r + k)*p + l]. Copies the data.
enum DkpsStatus dkps_tensor_new(uintptr_t n,
                                uintptr_t m,
                                uintptr_t r,
                                uintptr_t p,
                                const double *values,
                                struct DkpsTensor **out);

// Frees a tensor handle (null is a no-op).
void dkps_tensor_free(struct DkpsTensor *tensor);

// Runs the embedding pipeline at dimension `dim`. `plain_dissimilarity`
// selects the convention: 0 = root (default), nonzero = plain.
enum DkpsStatus dkps_embed_tensor(const struct DkpsTensor *tensor,
                                  uintptr_t dim,
                                  int plain_dissimilarity,
                                  struct DkpsEmbedding **out);

// Frees an embedding handle (null is a no-op).
void dkps_embedding_free(struct DkpsEmbedding *embedding);

// Number of embedded models.
uintptr_t dkps_embedding_n(const struct DkpsEmbedding *embedding);

// Embedding dimension.
uintptr_t dkps_embedding_dim(const struct DkpsEmbedding *embedding);

// Copies the n x d coordinate matrix (row-major) into `out`.
enum DkpsStatus dkps_embedding_coords(const struct DkpsEmbedding *embedding, double *out);

// Copies the d retained eigenvalues (magnitude-descending) into `out`.
enum DkpsStatus dkps_embedding_eigenvalues(const struct DkpsEmbedding *embedding, double *out);

// Copies the n x n dissimilarity matrix (row-major) into `out`.
enum DkpsStatus dkps_embedding_dissimilarity(const struct DkpsEmbedding *embedding, double *out);

// Writes the retained-spectrum signature: `p_out` positive and `q_out`
// negative eigenvalue counts.
enum DkpsStatus dkps_embedding_signature(const struct DkpsEmbedding *embedding,
                                         uintptr_t *p_out,
                                         uintptr_t *q_out);

// Orthogonal-alignment residual norms between two n x d configurations
// (row-major buffers). Any of the three output pointers may be null.
enum DkpsStatus dkps_alignment_errors(const double *psi_hat,
                                      const double *psi,
                                      uintptr_t n,
                                      uintptr_t d,
                                      double *frob_out,
                                      double *spec_out,
                                      double *two_inf_out);

// The spectral noise threshold (n^3/r)^(1/2 - delta).
enum DkpsStatus dkps_spectral_threshold(uintptr_t n, uint64_t r, double delta, double *out);

// The cubic bound coefficients; `coeffs_out` receives C0..C3.
enum DkpsStatus dkps_error_bound_coeffs(double lambda_1,
                                        double lambda_d,
                                        uintptr_t d,
                                        double *coeffs_out);

// The uniform error bound at the threshold implied by (n, r, delta).
enum DkpsStatus dkps_error_bound(double lambda_1,
                                 double lambda_d,
                                 uintptr_t d,
                                 uintptr_t n,
                                 uint64_t r,
                                 double delta,
                                 double *out);

// Lower bound on the probability that every centered-matrix entry deviates
// by less than eps.
enum DkpsStatus dkps_entrywise_prob(double gamma_sum,
                                    uintptr_t n,
                                    uintptr_t m,
                                    uint64_t r,
                                    double eps,
                                    double *out);

// Perspective difference test: writes the statistic and sets `reject_out`
// to 1 iff ||a - b|| strictly exceeds 2 kappa.
enum DkpsStatus dkps_perspective_test(const double *a,
                                      const double *b,
                                      uintptr_t len,
                                      double kappa,
                                      double *statistic_out,
                                      int *reject_out);

// Library version string (static storage).
const char *dkps_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DKPS_H */
