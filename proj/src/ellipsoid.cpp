#include "rce/ellipsoid.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "rce/kernels.hpp"

namespace rce {

namespace {
// Relative eigenvalue floor below which a direction counts as flat.
constexpr double kDegenerateRelTol = 1e-13;
}  // namespace

Ellipsoid::Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape)
    : center_(std::move(center)), shape_(std::move(shape)) {
  if (shape_.rows() != shape_.cols() || shape_.rows() != center_.size())
    throw DimensionMismatch("Ellipsoid: center/shape dimensions disagree");
  const double norm = shape_.norm();
  const double asym = (shape_ - shape_.transpose()).norm();
  if (asym > 1e-10 * std::max(norm, 1e-300))
    throw Error("Ellipsoid: shape matrix is not symmetric");
  shape_ = ((shape_ + shape_.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shape_);
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  const double lmax = eigenvalues_(eigenvalues_.size() - 1);
  if (eigenvalues_(0) < -1e-10 * std::max(norm, 1e-300))
    throw Error("Ellipsoid: shape matrix has a negative eigenvalue");
  const double floor_val = kDegenerateRelTol * std::max(lmax, 0.0);
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (eigenvalues_(i) <= floor_val) {
      eigenvalues_(i) = std::max(eigenvalues_(i), 0.0);
      degenerate_ = true;
    }
  }
  if (lmax <= 0.0) degenerate_ = true;
}

double log_unit_ball_volume(int dim) {
  return 0.5 * dim * std::log(M_PI) - std::lgamma(0.5 * dim + 1.0);
}

double log_volume(const Ellipsoid& e) {
  if (e.degenerate())
    throw DegenerateEllipsoid("log_volume: ellipsoid has a zero semi-axis");
  double half_logdet = 0.0;
  for (Eigen::Index i = 0; i < e.eigenvalues().size(); ++i)
    half_logdet += 0.5 * std::log(e.eigenvalues()(i));
  return log_unit_ball_volume(e.dim()) + half_logdet;
}

double condition_number(const Ellipsoid& e) {
  if (e.degenerate())
    throw DegenerateEllipsoid(
        "condition_number: ellipsoid has a zero semi-axis");
  const auto& ev = e.eigenvalues();
  return std::sqrt(ev(ev.size() - 1) / ev(0));
}

double mahalanobis_sq(const Ellipsoid& e, const Eigen::VectorXd& x) {
  if (x.size() != e.dim())
    throw DimensionMismatch("mahalanobis_sq: dimension mismatch");
  if (e.degenerate())
    throw DegenerateEllipsoid("mahalanobis_sq: degenerate ellipsoid");
  const Eigen::VectorXd t = e.eigenvectors().transpose() * (x - e.center());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    acc += t(i) * t(i) / e.eigenvalues()(i);
  return acc;
}

CoverageResult coverage(const Ellipsoid& e, const PointSet& a, double slack) {
  if (a.dim() != e.dim())
    throw DimensionMismatch("coverage: point/ellipsoid dimension mismatch");
  CoverageResult res;
  const Eigen::Index n = a.size();
  if (n == 0) return res;

  const auto& ev = e.eigenvalues();
  const double lmax = ev(ev.size() - 1);
  const double flat_tol = slack * std::max(lmax, 1.0);
  std::vector<double> forms(static_cast<std::size_t>(n), 0.0);

  if (!e.degenerate()) {
    const Eigen::MatrixXd inv = e.eigenvectors() *
                                ev.cwiseInverse().asDiagonal() *
                                e.eigenvectors().transpose();
    const RowMatrixXd inv_rm = inv;
    kernels::quad_forms(a.data(), static_cast<std::size_t>(n),
                        static_cast<std::size_t>(a.dim()), inv_rm.data(),
                        e.center().data(), forms.data());
  } else {
    // Flat directions demand (near-)zero components; the positive directions
    // contribute to the quadratic form as usual.
    const double floor_val = kDegenerateRelTol * std::max(lmax, 0.0);
    const Eigen::MatrixXd vt = e.eigenvectors().transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd t = vt * (a.point(i) - e.center());
      double acc = 0.0;
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        if (ev(j) <= floor_val) {
          if (t(j) * t(j) > flat_tol) {
            acc = std::numeric_limits<double>::infinity();
            break;
          }
        } else {
          acc += t(j) * t(j) / ev(j);
        }
      }
      forms[static_cast<std::size_t>(i)] = acc;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (forms[static_cast<std::size_t>(i)] <= 1.0 + slack) {
      ++res.count;
      res.member_ids.push_back(a.id(i));
    }
  }
  res.fraction = static_cast<double>(res.count) / static_cast<double>(n);
  return res;
}

}  // namespace rce
