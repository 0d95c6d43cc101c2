#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops shared by the dual solver, coverage counting and
// the instance generators. Every kernel has a scalar reference implementation
// and (on x86-64) an AVX2+FMA variant; the active variant is picked once at
// runtime from CPU features. The two variants are equivalence-tested against
// each other, and RCE_KERNELS=scalar forces the reference path.

namespace rce::kernels {

enum class Impl { scalar, avx2 };

/// Implementation the dispatcher currently routes to.
Impl active();

/// Force an implementation (tests). Silently falls back to scalar when the
/// requested variant is unsupported on this CPU. Returns the impl in effect.
Impl set_impl(Impl impl);

bool avx2_supported();

const char* impl_name(Impl impl);

/// out[i] = <points row i, v>. points is n x dim row-major.
void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out);

/// out[i] = (x_i - center)^T q (x_i - center); q is dim x dim row-major
/// symmetric; center == nullptr means the origin.
void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out);

/// m = sum_i w[i] x_i x_i^T, written fully (symmetric), dim x dim row-major.
void weighted_moment(const double* points, std::size_t n, std::size_t dim,
                     const double* w, double* m);

/// lev[i] = (lev[i] - coef * s[i]^2) * scale.
void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale);

namespace scalar {
void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out);
void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out);
void weighted_moment(const double* points, std::size_t n, std::size_t dim,
                     const double* w, double* m);
void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define RCE_HAVE_AVX2_KERNELS 1
namespace avx2 {
void dot_rows(const double* points, std::size_t n, std::size_t dim,
              const double* v, double* out);
void quad_forms(const double* points, std::size_t n, std::size_t dim,
                const double* q, const double* center, double* out);
void weighted_moment(const double* points, std::size_t n, std::size_t dim,
                     const double* w, double* m);
void rank1_leverage_update(double* lev, const double* s, std::size_t n,
                           double coef, double scale);
}  // namespace avx2
#endif

}  // namespace rce::kernels
