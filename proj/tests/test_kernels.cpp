#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "rce/kernels.hpp"
#include "rce/rng.hpp"
#include "test_util.hpp"

using namespace rce;

namespace {

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / scale;
}

}  // namespace

#if defined(RCE_HAVE_AVX2_KERNELS)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!kernels::avx2_supported()) return;
  Rng rng(20240);
  for (std::size_t dim : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 11u, 13u, 16u}) {
    for (std::size_t n : {1u, 3u, 17u, 64u, 129u}) {
      std::vector<double> pts(n * dim), v(dim), center(dim), w(n);
      for (auto& x : pts) x = rng.normal();
      for (auto& x : v) x = rng.normal();
      for (auto& x : center) x = rng.normal();
      for (auto& x : w) x = rng.uniform();
      Eigen::MatrixXd q = testutil::random_psd(rng, static_cast<int>(dim));
      RowMatrixXd q_rm = q;

      std::vector<double> a(n), b(n);
      kernels::scalar::dot_rows(pts.data(), n, dim, v.data(), a.data());
      kernels::avx2::dot_rows(pts.data(), n, dim, v.data(), b.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(a[i], b[i]) < 1e-13);

      kernels::scalar::quad_forms(pts.data(), n, dim, q_rm.data(),
                                  center.data(), a.data());
      kernels::avx2::quad_forms(pts.data(), n, dim, q_rm.data(), center.data(),
                                b.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(a[i], b[i]) < 1e-12);

      kernels::scalar::quad_forms(pts.data(), n, dim, q_rm.data(), nullptr,
                                  a.data());
      kernels::avx2::quad_forms(pts.data(), n, dim, q_rm.data(), nullptr,
                                b.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(a[i], b[i]) < 1e-12);

      std::vector<double> ma(dim * dim), mb(dim * dim);
      kernels::scalar::weighted_moment(pts.data(), n, dim, w.data(), ma.data());
      kernels::avx2::weighted_moment(pts.data(), n, dim, w.data(), mb.data());
      for (std::size_t i = 0; i < dim * dim; ++i)
        CHECK(rel_err(ma[i], mb[i]) < 1e-12);

      std::vector<double> la(n), lb(n), s(n);
      for (std::size_t i = 0; i < n; ++i) {
        la[i] = rng.uniform(0.5, 4.0);
        lb[i] = la[i];
        s[i] = rng.normal();
      }
      kernels::scalar::rank1_leverage_update(la.data(), s.data(), n, 0.37, 1.21);
      kernels::avx2::rank1_leverage_update(lb.data(), s.data(), n, 0.37, 1.21);
      for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(la[i], lb[i]) < 1e-13);
    }
  }
}
#endif

TEST_CASE("dispatch honors forced implementation") {
  const kernels::Impl before = kernels::active();
  CHECK(kernels::set_impl(kernels::Impl::scalar) == kernels::Impl::scalar);
  CHECK(kernels::active() == kernels::Impl::scalar);
  if (kernels::avx2_supported()) {
    CHECK(kernels::set_impl(kernels::Impl::avx2) == kernels::Impl::avx2);
    CHECK(kernels::active() == kernels::Impl::avx2);
  } else {
    CHECK(kernels::set_impl(kernels::Impl::avx2) == kernels::Impl::scalar);
  }
  kernels::set_impl(before);
}

TEST_CASE("weighted_moment is symmetric and matches Eigen") {
  Rng rng(7);
  const std::size_t n = 40, dim = 6;
  RowMatrixXd pts = testutil::gaussian_points(rng, n, dim);
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) w(i) = rng.uniform();
  RowMatrixXd m(dim, dim);
  kernels::weighted_moment(pts.data(), n, dim, w.data(), m.data());
  const Eigen::MatrixXd ref = pts.transpose() * w.asDiagonal() * pts;
  CHECK((Eigen::MatrixXd(m) - ref).norm() < 1e-12 * std::max(1.0, ref.norm()));
  CHECK((Eigen::MatrixXd(m) - Eigen::MatrixXd(m).transpose()).norm() == 0.0);
}
