#include "rce/point_set.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

namespace rce {

PointSet::PointSet(RowMatrixXd points)
    : dim_(static_cast<int>(points.cols())), points_(std::move(points)) {
  ids_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(ids_.begin(), ids_.end(), std::int64_t{0});
  validate();
}

PointSet::PointSet(RowMatrixXd points, std::vector<std::int64_t> ids)
    : dim_(static_cast<int>(points.cols())),
      points_(std::move(points)),
      ids_(std::move(ids)) {
  validate();
}

void PointSet::validate() const {
  if (dim_ <= 0) throw DimensionMismatch("PointSet: dim must be positive");
  if (static_cast<Eigen::Index>(ids_.size()) != points_.rows())
    throw DimensionMismatch("PointSet: ids/points length mismatch");
  if (!points_.allFinite())
    throw Error("PointSet: coordinates must be finite");
  std::unordered_set<std::int64_t> seen(ids_.begin(), ids_.end());
  if (seen.size() != ids_.size())
    throw Error("PointSet: ids must be distinct");
}

PointSet PointSet::select(const std::vector<Eigen::Index>& positions) const {
  RowMatrixXd out(static_cast<Eigen::Index>(positions.size()), dim_);
  std::vector<std::int64_t> out_ids;
  out_ids.reserve(positions.size());
  Eigen::Index r = 0;
  for (Eigen::Index pos : positions) {
    out.row(r++) = points_.row(pos);
    out_ids.push_back(ids_[static_cast<std::size_t>(pos)]);
  }
  return PointSet(std::move(out), std::move(out_ids));
}

PointSet PointSet::erase(const std::vector<Eigen::Index>& positions) const {
  std::vector<bool> drop(static_cast<std::size_t>(size()), false);
  for (Eigen::Index pos : positions) drop[static_cast<std::size_t>(pos)] = true;
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i)
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  return select(keep);
}

PointSet lift(const PointSet& a) {
  RowMatrixXd out(a.size(), a.dim() + 1);
  out.leftCols(a.dim()) = a.points();
  out.col(a.dim()).setOnes();
  return PointSet(std::move(out), a.ids());
}

PointSet symmetrize(const PointSet& a) {
  const Eigen::Index n = a.size();
  RowMatrixXd out(2 * n, a.dim());
  out.topRows(n) = a.points();
  out.bottomRows(n) = -a.points();
  std::vector<std::int64_t> ids = a.ids();
  ids.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(a.id(i) + n);
  return PointSet(std::move(out), std::move(ids));
}

}  // namespace rce
