#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "rce/ellipsoid.hpp"
#include "rce/point_set.hpp"

namespace rce {

struct SolverConfig {
  /// Relative optimality tolerance on the leverage certificate.
  double eta = 1e-7;
  /// 0 means the default 100 * k * ceil(log n).
  std::int64_t max_iters = 0;
  double support_threshold = 1e-8;
  /// 0 disables repair; a positive value adds ridge * (trace/k) * I to the
  /// moment when the points do not span, instead of raising RankDeficient.
  double ridge = 0.0;
  /// Start from an extreme-point pair per coordinate direction instead of
  /// uniform mass. Optional speedup; results remain deterministic.
  bool ky_init = false;
};

/// Optimal weights for the determinant-maximization dual of the
/// origin-centered minimum-volume enclosing ellipsoid.
///
/// Leverages are reported in the normalized convention: leverage_i =
/// k * a_i^T moment^{-1} a_i, so the first-order certificate at an
/// eta-approximate optimum reads max_leverage <= (1 + eta) * k.
struct DualSolution {
  Eigen::VectorXd weights;   // w_i in [0, 1+O(eta)], sum = k
  Eigen::MatrixXd moment;    // sum_i w_i a_i a_i^T
  double max_leverage = 0.0;
  double logdet = 0.0;       // logdet(moment)
  std::vector<std::int64_t> support_ids;  // ids with w_i > support_threshold
  Eigen::VectorXd leverages;  // per input row, normalized convention
  /// False when the solve stopped at max_iters with a stale certificate.
  bool certified = false;
};

/// Maximizes logdet(sum_i w_i a_i a_i^T) over w >= 0, sum w <= k by
/// Frank-Wolfe coordinate ascent with away steps and rank-one inverse
/// updates. Deterministic; argmax ties break toward the lowest point id.
///
/// Throws RankDeficient (with the numerical rank and a span basis) when the
/// points do not span R^k and cfg.ridge == 0.
DualSolution solve_dual_origin(const PointSet& a, const SolverConfig& cfg = {},
                               const Eigen::VectorXd* warm_weights = nullptr);

/// Primal ellipsoid of the origin-centered problem: center 0 and shape
/// moment * max(1, max_leverage / k), so enclosure of the solved points holds
/// despite the approximate certificate.
Ellipsoid extract_primal_origin(const DualSolution& sol);

struct MveeResult {
  Ellipsoid ellipsoid;
  DualSolution dual;
};

/// Free-center minimum-volume enclosing ellipsoid via the lift: embeds points
/// as (x; 1), solves the origin-centered dual in R^{d+1}, and extracts
/// center = sum w a / (d+1), shape = (d/(d+1)) * sum w (a-c)(a-c)^T with the
/// enclosure rescale folded in.
///
/// Affinely dependent inputs yield a degenerate (zero-volume) ellipsoid
/// supported on the affine hull, with the dual solved inside that flat.
/// warm_lifted_weights, when given, must align with a's rows and seeds the
/// ascent (used by the removal rounds).
MveeResult solve_mvee(const PointSet& a, const SolverConfig& cfg = {},
                      const Eigen::VectorXd* warm_lifted_weights = nullptr);

/// Same optimum as solve_mvee via an algebraically independent route: ascent
/// on the free-center dual directly in R^d (weights summing to d, center the
/// weighted mean). Kept separate so the two routes can check each other.
MveeResult solve_mvee_direct(const PointSet& a, const SolverConfig& cfg = {});

struct SlacknessRow {
  std::int64_t id = 0;
  double weight = 0.0;
  double leverage = 0.0;
  double residual = 0.0;  // w_i * (leverage_i / k - 1)
};

/// Complementary-slackness residuals of a solution against the points it was
/// solved on. At an eta-approximate optimum, max |residual| = O(eta).
std::vector<SlacknessRow> slackness_residuals(const DualSolution& sol,
                                              const PointSet& a);

struct FrameAtom {
  double weight = 0.0;
  Eigen::VectorXd direction;  // unit vector
};

/// Gap sum_i w_i log(b_i^T P b_i) - logdet(P), nonnegative whenever the
/// weighted directions resolve the identity. Throws NotATightFrame if
/// ||sum w b b^T - I||_F > 1e-6 or some ||b|| deviates from 1 by more than
/// 1e-8; throws Error when P is not positive definite.
double brascamp_lieb_gap(const Eigen::MatrixXd& p,
                         const std::vector<FrameAtom>& frame);

/// Whitened support directions of a dual optimum: b_i = S^{-1/2} a_i with
/// S the support-restricted moment, renormalized to unit length with the
/// norm absorbed into the weight. The result resolves the identity to
/// floating-point accuracy.
std::vector<FrameAtom> tight_frame_from_dual(const DualSolution& sol,
                                             const PointSet& a);

}  // namespace rce
