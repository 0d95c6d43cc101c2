#include "rce/oracle.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace rce {

namespace {

// C(n, k) saturating at limit + 1.
std::int64_t binomial_capped(std::int64_t n, std::int64_t k,
                             std::int64_t limit) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  double acc = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    acc *= static_cast<double>(n - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(limit)) return limit + 1;
  }
  return static_cast<std::int64_t>(std::llround(acc));
}

}  // namespace

OracleResult brute_force_min_k_ellipsoid(const PointSet& a, std::int64_t k,
                                         const OracleBudget& budget) {
  const std::int64_t n = a.size();
  if (k < 1 || k > n)
    throw Error("brute_force_min_k_ellipsoid: need 1 <= k <= n");
  if (binomial_capped(n, k, budget.max_subsets) > budget.max_subsets)
    throw BudgetExceeded("brute_force_min_k_ellipsoid: C(n, k) exceeds budget");

  SolverConfig cfg;
  cfg.eta = budget.tol;
  cfg.max_iters = 0;  // generous default at this scale

  std::vector<Eigen::Index> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), Eigen::Index{0});

  bool have_best = false;
  double best_vol = std::numeric_limits<double>::infinity();
  OracleResult best{Ellipsoid(Eigen::VectorXd::Zero(a.dim()),
                              Eigen::MatrixXd::Zero(a.dim(), a.dim())),
                    {}, 0.0, {}};

  for (;;) {
    const PointSet subset = a.select(pick);
    MveeResult res = solve_mvee(subset, cfg);
    const double vol = res.ellipsoid.degenerate()
                           ? -std::numeric_limits<double>::infinity()
                           : log_volume(res.ellipsoid);
    if (!have_best || vol < best_vol) {
      have_best = true;
      best_vol = vol;
      best.ellipsoid = res.ellipsoid;
      best.subset_ids = subset.ids();
    }

    // colex successor
    std::size_t i = 0;
    while (i + 1 < pick.size() && pick[i] + 1 == pick[i + 1]) ++i;
    if (i + 1 == pick.size() && pick[i] + 1 >= n) break;
    ++pick[i];
    for (std::size_t j = 0; j < i; ++j) pick[j] = static_cast<Eigen::Index>(j);
  }

  best.log_volume = best_vol;
  best.covered_ids = coverage(best.ellipsoid, a).member_ids;
  return best;
}

MveeResult high_precision_mvee(const PointSet& a) {
  SolverConfig cfg;
  cfg.eta = 1e-12;
  const int k = a.dim() + 1;
  const double ln = std::log(std::max<double>(static_cast<double>(a.size()), 2.0));
  cfg.max_iters = static_cast<std::int64_t>(std::ceil(100.0 * k * ln)) * 100;
  MveeResult res = solve_mvee(a, cfg);
  if (res.ellipsoid.degenerate())
    throw RankDeficient(0, Eigen::MatrixXd(),
                        "high_precision_mvee: points do not affinely span");
  return res;
}

}  // namespace rce
