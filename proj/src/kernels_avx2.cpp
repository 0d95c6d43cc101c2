#include "rce/kernels.hpp"

#if defined(RCE_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <vector>

namespace rce::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double dot(const double* a, const double* b, std::size_t dim) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= dim; j += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), acc);
  double tail = 0.0;
  for (; j < dim; ++j) tail += a[j] * b[j];
  return hsum(acc) + tail;
}

}  // namespace

void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(points + i * dim, v, dim);
}

void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out) {
  std::vector<double> t(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points + i * dim;
    if (center) {
      std::size_t j = 0;
      for (; j + 4 <= dim; j += 4)
        _mm256_storeu_pd(t.data() + j,
                         _mm256_sub_pd(_mm256_loadu_pd(x + j),
                                       _mm256_loadu_pd(center + j)));
      for (; j < dim; ++j) t[j] = x[j] - center[j];
    } else {
      for (std::size_t j = 0; j < dim; ++j) t[j] = x[j];
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < dim; ++p)
      acc += t[p] * dot(q + p * dim, t.data(), dim);
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
      const __m256d wp = _mm256_set1_pd(wi * x[p]);
      double* mrow = m + p * dim;
      std::size_t l = p;
      for (; l + 4 <= dim; l += 4)
        _mm256_storeu_pd(mrow + l, _mm256_fmadd_pd(wp, _mm256_loadu_pd(x + l),
                                                   _mm256_loadu_pd(mrow + l)));
      const double wps = wi * x[p];
      for (; l < dim; ++l) mrow[l] += wps * x[l];
    }
  }
  for (std::size_t p = 1; p < dim; ++p)
    for (std::size_t l = 0; l < p; ++l) m[p * dim + l] = m[l * dim + p];
}

void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale) {
  const __m256d vc = _mm256_set1_pd(coef);
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d si = _mm256_loadu_pd(s + i);
    const __m256d li = _mm256_loadu_pd(lev + i);
    const __m256d upd = _mm256_fnmadd_pd(vc, _mm256_mul_pd(si, si), li);
    _mm256_storeu_pd(lev + i, _mm256_mul_pd(upd, vs));
  }
  for (; i < n; ++i) lev[i] = (lev[i] - coef * s[i] * s[i]) * scale;
}

}  // namespace rce::kernels::avx2

#endif  // RCE_HAVE_AVX2_KERNELS
