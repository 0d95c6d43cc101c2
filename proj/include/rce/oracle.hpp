#pragma once

#include <cstdint>
#include <vector>

#include "rce/dual_solver.hpp"
#include "rce/ellipsoid.hpp"
#include "rce/point_set.hpp"

namespace rce {

struct OracleBudget {
  std::int64_t max_subsets = 200000;
  double tol = 1e-12;
};

struct OracleResult {
  Ellipsoid ellipsoid;
  std::vector<std::int64_t> covered_ids;  // membership recount, full set
  double log_volume = 0.0;  // -infinity when the optimum is a flat
  std::vector<std::int64_t> subset_ids;   // the witnessing k-subset
};

/// Exact optimum of "min volume over ellipsoids covering >= k points":
/// enclosing-ellipsoid of every k-subset, solved at budget.tol. Correct
/// because the optimal ellipsoid's covered set contains a k-subset whose
/// enclosing ellipsoid is no larger. Zero-volume (affinely dependent)
/// subsets compare as -infinity and win.
/// Throws BudgetExceeded when C(n, k) > budget.max_subsets.
OracleResult brute_force_min_k_ellipsoid(const PointSet& a, std::int64_t k,
                                         const OracleBudget& budget = {});

/// Reference enclosing ellipsoid: the same ascent at tolerance 1e-12 with a
/// 100x iteration budget. Throws RankDeficient on affinely dependent input.
MveeResult high_precision_mvee(const PointSet& a);

}  // namespace rce
