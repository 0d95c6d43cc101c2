#include <vector>

#include "rce/kernels.hpp"

namespace rce::kernels::scalar {

void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points + i * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += x[j] * v[j];
    out[i] = acc;
  }
}

void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out) {
  std::vector<double> t(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points + i * dim;
    if (center) {
      for (std::size_t j = 0; j < dim; ++j) t[j] = x[j] - center[j];
    } else {
      for (std::size_t j = 0; j < dim; ++j) t[j] = x[j];
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < dim; ++p) {
      const double* qrow = q + p * dim;
      double yp = 0.0;
      for (std::size_t l = 0; l < dim; ++l) yp += qrow[l] * t[l];
      acc += t[p] * yp;
    }
    out[i] = acc;
  }
}

void weighted_moment(const double* points, std::size_t n, std::size_t dim,
                     const double* w, double* m) {
  for (std::size_t p = 0; p < dim * dim; ++p) m[p] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points + i * dim;
    const double wi = w[i];
    if (wi == 0.0) continue;
    for (std::size_t p = 0; p < dim; ++p) {
      const double wp = wi * x[p];
      double* mrow = m + p * dim;
      for (std::size_t l = p; l < dim; ++l) mrow[l] += wp * x[l];
    }
  }
  // Mirror the upper triangle.
  for (std::size_t p = 1; p < dim; ++p)
    for (std::size_t l = 0; l < p; ++l) m[p * dim + l] = m[l * dim + p];
}

void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale) {
  for (std::size_t i = 0; i < n; ++i)
    lev[i] = (lev[i] - coef * s[i] * s[i]) * scale;
}

}  // namespace rce::kernels::scalar
