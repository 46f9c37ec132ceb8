#include <math.h>
#include <stdio.h>
#include "bwls.h"

#define CHECK(call)                                                       \
  do {                                                                    \
    BwlsStatus st_ = (call);                                              \
    if (st_ != BWLS_STATUS_OK) {                                          \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_,                  \
              bwls_last_error_message());                                 \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(void) {
  BwlsBasis *basis = NULL;
  BwlsSample *sample = NULL;
  BwlsModel *model = NULL;
  size_t m = 0, n = 0;
  double pts[4096], y[4096], v = 0.0;

  CHECK(bwls_basis_new(BWLS_MEASURE_GAUSSIAN, 1, BWLS_INDEX_RULE_TOTAL_DEGREE, 3, &basis));
  CHECK(bwls_basis_size(basis, &m));
  CHECK(bwls_design_new(basis, "owls", 0.9, 0.01, 1, 7, &sample));
  CHECK(bwls_sample_len(sample, &n));
  CHECK(bwls_sample_points(sample, pts, sizeof pts / sizeof pts[0]));
  for (size_t i = 0; i < n; i++) y[i] = pts[i] * pts[i];
  CHECK(bwls_fit(basis, sample, y, n, &model));
  double x = 1.5;
  CHECK(bwls_model_eval(model, &x, 1, &v));
  if (fabs(v - 2.25) > 1e-10) {
    fprintf(stderr, "eval %.17g\n", v);
    return 1;
  }
  if (bwls_basis_size(NULL, &m) != BWLS_STATUS_NULL_POINTER) return 1;
  printf("ok m=%zu n=%zu version=%s\n", m, n, bwls_version());
  bwls_model_free(model);
  bwls_sample_free(sample);
  bwls_basis_free(basis);
  return 0;
}
