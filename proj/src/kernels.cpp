#include "rce/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rce::kernels {

namespace {

struct Table {
  void (*dot_rows)(const double*, std::size_t, std::size_t, const double*,
                   double*);
  void (*quad_forms)(const double*, std::size_t, std::size_t, const double*,
                     const double*, double*);
  void (*weighted_moment)(const double*, std::size_t, std::size_t,
                          const double*, double*);
  void (*rank1_leverage_update)(double*, const double*, std::size_t, double,
                                double);
};

constexpr Table kScalar{scalar::dot_rows, scalar::quad_forms,
                        scalar::weighted_moment,
                        scalar::rank1_leverage_update};

#if defined(RCE_HAVE_AVX2_KERNELS)
constexpr Table kAvx2{avx2::dot_rows, avx2::quad_forms, avx2::weighted_moment,
                      avx2::rank1_leverage_update};
#endif

Impl g_impl = Impl::scalar;
const Table* g_table = &kScalar;
bool g_initialized = false;

void init_once() {
  if (g_initialized) return;
  g_initialized = true;
  Impl want = avx2_supported() ? Impl::avx2 : Impl::scalar;
  const char* env = std::getenv("RCE_KERNELS");
  if (env) {
    if (std::strcmp(env, "scalar") == 0) want = Impl::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) want = Impl::avx2;
  }
  set_impl(want);
}

}  // namespace

bool avx2_supported() {
#if defined(RCE_HAVE_AVX2_KERNELS)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Impl set_impl(Impl impl) {
  g_initialized = true;
#if defined(RCE_HAVE_AVX2_KERNELS)
  if (impl == Impl::avx2 && avx2_supported()) {
    g_impl = Impl::avx2;
    g_table = &kAvx2;
    return g_impl;
  }
#endif
  g_impl = Impl::scalar;
  g_table = &kScalar;
  return g_impl;
}

Impl active() {
  init_once();
  return g_impl;
}

const char* impl_name(Impl impl) {
  return impl == Impl::avx2 ? "avx2" : "scalar";
}

void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out) {
  init_once();
  g_table->dot_rows(points, n, dim, v, out);
}

void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out) {
  init_once();
  g_table->quad_forms(points, n, dim, q, center, out);
}

void weighted_moment(const double* points, std::size_t n, std::size_t dim,
                     const double* w, double* m) {
  init_once();
  g_table->weighted_moment(points, n, dim, w, m);
}

void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale) {
  init_once();
  g_table->rank1_leverage_update(lev, s, n, coef, scale);
}

}  // namespace rce::kernels
