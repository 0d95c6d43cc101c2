#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rce/errors.hpp"

namespace rce {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// An ordered list of points in R^d with stable integer identities. Removal
/// produces a new set whose surviving rows keep their original ids.
class PointSet {
 public:
  explicit PointSet(int dim) : dim_(dim), points_(0, dim) {
    if (dim <= 0) throw DimensionMismatch("PointSet: dim must be positive");
  }

  /// Ids default to 0..n-1.
  explicit PointSet(RowMatrixXd points);

  PointSet(RowMatrixXd points, std::vector<std::int64_t> ids);

  int dim() const { return dim_; }
  Eigen::Index size() const { return points_.rows(); }

  const RowMatrixXd& points() const { return points_; }
  const double* data() const { return points_.data(); }

  Eigen::VectorXd point(Eigen::Index i) const {
    return points_.row(i).transpose();
  }
  std::int64_t id(Eigen::Index i) const { return ids_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int64_t>& ids() const { return ids_; }

  /// New set formed by the rows at the given positions, ids preserved.
  PointSet select(const std::vector<Eigen::Index>& positions) const;

  /// New set with the rows at the given positions removed, ids preserved.
  PointSet erase(const std::vector<Eigen::Index>& positions) const;

 private:
  void validate() const;

  int dim_;
  RowMatrixXd points_;
  std::vector<std::int64_t> ids_;
};

/// Embeds each point x as (x; 1) in R^{d+1}; ids preserved.
PointSet lift(const PointSet& a);

/// Returns {a_i} followed by {-a_i}; ids of the negated copies are offset by
/// the input count.
PointSet symmetrize(const PointSet& a);

}  // namespace rce
