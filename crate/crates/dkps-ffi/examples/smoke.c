/* Minimal C consumer of the dkps C ABI.
 *
 * Build (from the workspace root, after `cargo build -p dkps-ffi --release`):
 *
 *   cc crates/dkps-ffi/examples/smoke.c \
 *      -Icrates/dkps-ffi/include \
 *      target/release/libdkps_ffi.a -lm -o dkps_smoke
 */
#include <stdio.h>
#include <stdlib.h>

#include "dkps.h"

int main(void) {
  /* 3 models, 1 query, 1 replicate, scalar responses 0, 1, 2 */
  const double values[] = {0.0, 1.0, 2.0};
  DkpsTensor *tensor = NULL;
  DkpsStatus status = dkps_tensor_new(3, 1, 1, 1, values, &tensor);
  if (status != DKPS_STATUS_OK) {
    fprintf(stderr, "tensor: %s\n", dkps_last_error_message());
    return 1;
  }

  DkpsEmbedding *embedding = NULL;
  status = dkps_embed_tensor(tensor, 1, 0, &embedding);
  if (status != DKPS_STATUS_OK) {
    fprintf(stderr, "embed: %s\n", dkps_last_error_message());
    return 1;
  }

  size_t n = dkps_embedding_n(embedding);
  size_t d = dkps_embedding_dim(embedding);
  double *coords = malloc(n * d * sizeof(double));
  dkps_embedding_coords(embedding, coords);
  printf("embedded %zu models into %zu dimension(s):\n", n, d);
  for (size_t i = 0; i < n; i++) {
    printf("  model %zu -> %.6f\n", i, coords[i * d]);
  }

  double bound = 0.0;
  dkps_error_bound(1.0, 1.0, 1, 10, 10000000, 0.25, &bound);
  printf("error bound at n=10, r=1e7, delta=0.25: %.6f\n", bound);

  free(coords);
  dkps_embedding_free(embedding);
  dkps_tensor_free(tensor);
  return 0;
}
