#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rce/errors.hpp"
#include "rce/point_set.hpp"

namespace rce {

/// Ellipsoid {x : (x - c)^T M^{-1} (x - c) <= 1} with symmetric PSD shape M.
/// Semi-axis lengths are the square roots of the shape eigenvalues. A zero
/// eigenvalue means the ellipsoid is flat (zero volume) in that direction;
/// such ellipsoids are representable and flagged, never repaired here.
class Ellipsoid {
 public:
  /// Validates symmetry (relative Frobenius tolerance 1e-10) and eigenvalue
  /// nonnegativity, then stores the exactly symmetrized shape. The spectral
  /// decomposition is computed eagerly so all accessors are const and
  /// thread-safe.
  Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape);

  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }

  /// Shape eigenvalues in ascending order (clamped to >= 0).
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Matching eigenvectors as columns.
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  bool degenerate() const { return degenerate_; }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  bool degenerate_ = false;
};

/// log vol(E) = log kappa_d + (1/2) sum_i log lambda_i(M), where kappa_d is
/// the unit-ball volume. Never materializes the raw volume.
/// Throws DegenerateEllipsoid when any eigenvalue is (numerically) zero; the
/// caller may treat that case as log-volume -infinity.
double log_volume(const Ellipsoid& e);

/// log of the d-dimensional unit-ball volume.
double log_unit_ball_volume(int dim);

/// Ratio of longest to shortest semi-axis, sqrt(lambda_max / lambda_min).
double condition_number(const Ellipsoid& e);

struct CoverageResult {
  std::int64_t count = 0;
  double fraction = 0.0;
  std::vector<std::int64_t> member_ids;
};

/// Counts points with (x-c)^T M^{-1} (x-c) <= 1 + slack (closed ellipsoid).
/// For flat directions of a degenerate ellipsoid, membership requires the
/// squared component along the flat normal to be at most
/// slack * max(lambda_max, 1).
CoverageResult coverage(const Ellipsoid& e, const PointSet& a,
                        double slack = 1e-9);

/// Quadratic form (x-c)^T M^{-1} (x-c); requires a nondegenerate ellipsoid.
double mahalanobis_sq(const Ellipsoid& e, const Eigen::VectorXd& x);

}  // namespace rce
