#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rce/dual_solver.hpp"
#include "rce/ellipsoid.hpp"
#include "rce/point_set.hpp"
#include "rce/rng.hpp"

namespace rce {

struct AlgoConfig {
  double alpha = 0.05;   // target miscoverage, in (0, 1)
  double gamma = 0.25;   // progress parameter, in (0, 1)
  double iter_const_c = 56.0;
  double coverage_const_c2 = 4.0;
  /// 0 means the default ceil(log2 n), at least 1.
  int restarts = 0;
  /// Per-branch removal budget as a fraction of n; negative means the
  /// default coverage_const_c2 * alpha / gamma.
  double removal_cap_factor = -1.0;
  SolverConfig solver;
  std::uint64_t seed = 0;
  /// Quadratic-form slack used when recounting candidate coverage.
  double membership_slack = 1e-9;
  /// 0 = one worker per hardware thread (capped by the branch count).
  /// Results are identical for every thread count.
  int threads = 1;
  /// 0 runs every retained deduplicated ball (the reference behavior, up to
  /// n^2 branches). A positive cap deterministically keeps the whole-set
  /// ball plus the smallest-radius retained balls, bounding the work; see
  /// README for when this is safe.
  std::size_t ball_cap = 0;
  /// When non-empty, each round also reports the dual weight landing on
  /// these ids (used by planted-instance diagnostics).
  std::vector<std::int64_t> tracked_ids;
};

struct BallSpec {
  std::int64_t center_id = 0;
  std::int64_t radius_id = 0;
  double radius = 0.0;
  std::int64_t member_count = 0;
};

/// Balls B(a_i, ||a_i - a_j||) over ordered pairs, one entry per distinct
/// (center, radius), retained iff they cover at least (1-alpha) n points.
/// Any ellipsoid covering (1-alpha)n points has all its covered points inside
/// some retained ball of radius at most twice its longest semi-axis.
std::vector<BallSpec> candidate_bounding_balls(const PointSet& a,
                                               double alpha);

/// One independent Bernoulli draw per point with probability
/// clamp(weights_i, 0, 1); returns the ids drawn for removal. Exactly one
/// uniform is consumed per point, in row order.
std::vector<std::int64_t> removal_draw(const Eigen::VectorXd& weights,
                                       const PointSet& pts, Rng& rng);

struct RemovalRound {
  std::vector<std::int64_t> removed_ids;
  DualSolution dual;
  /// Survivors span only a proper subspace: nothing is removed and flat
  /// holds the zero-volume candidate instead of a dual.
  bool short_circuit = false;
  std::optional<Ellipsoid> flat;
};

/// One removal round on an origin-centered (e.g. lifted) point set: solve the
/// dual, clamp the weights to [0, 1], and remove each point independently
/// with that probability. Expected removals equal the clamped weight sum,
/// about the ambient dimension.
RemovalRound removal_round(const PointSet& origin_points,
                           const SolverConfig& cfg, Rng& rng);

struct CandidateRecord {
  Ellipsoid ellipsoid;
  std::int64_t coverage_count = 0;  // recounted against the full input set
  double log_volume = -std::numeric_limits<double>::infinity();
  std::pair<std::int64_t, std::int64_t> ball_id{-1, -1};
  int round = 0;    // 1-based
  int restart = 0;  // 0-based
  /// Dual weight on cfg.tracked_ids among this round's survivors (NaN when
  /// tracking is off).
  double tracked_weight = std::numeric_limits<double>::quiet_NaN();
  /// Cumulative removals in this branch before the round's solve.
  std::int64_t removed_before = 0;
  /// Whether the round's dual met its leverage certificate; rounds that did
  /// not are enclosure-safe but can be far from the optimum.
  bool dual_certified = false;
  double dual_max_leverage = std::numeric_limits<double>::quiet_NaN();
};

struct BranchStat {
  std::size_t ball_index = 0;
  int restart = 0;
  std::pair<std::int64_t, std::int64_t> ball_id{-1, -1};
  int rounds_run = 0;
  bool aborted_by_cap = false;
  bool ended_degenerate = false;
  bool exhausted = false;  // ran out of survivors
};

struct CoverageOutput {
  std::vector<CandidateRecord> candidates;  // every recorded round
  std::size_t best_index = 0;               // into candidates
  std::vector<BranchStat> branches;
  std::size_t balls_retained = 0;
  std::size_t balls_after_dedup = 0;
  std::size_t balls_run = 0;
  int restarts = 0;
  std::int64_t rounds_per_branch_limit = 0;  // J
  std::int64_t removal_cap_points = 0;
  const CandidateRecord& best() const { return candidates[best_index]; }
};

/// No recorded candidate met the coverage floor; carries everything recorded
/// for diagnosis.
class NoFeasibleCandidate : public Error {
 public:
  NoFeasibleCandidate(std::string what, std::vector<CandidateRecord> recorded)
      : Error(std::move(what)), candidates_(std::move(recorded)) {}
  const std::vector<CandidateRecord>& candidates() const { return candidates_; }

 private:
  std::vector<CandidateRecord> candidates_;
};

/// Smallest-volume ellipsoid covering roughly a (1 - alpha) fraction of the
/// points: enumerates retained bounding balls, and per (ball, restart) branch
/// runs rounds of lifted dual solve + independent removal with probability
/// w_i, recording a candidate every round. Returns the minimum-log-volume
/// candidate whose recounted coverage clears (1 - c2 alpha / gamma) n.
/// Deterministic given cfg.seed regardless of thread count.
CoverageOutput approximate_coverage_ellipsoid(const PointSet& a,
                                              const AlgoConfig& cfg);

/// Origin-centered variant used for symmetric inputs (no lift, no ball
/// enumeration; weights sum to d and drive removal directly in R^d).
CoverageOutput approximate_coverage_ellipsoid_origin(const PointSet& a,
                                                     const AlgoConfig& cfg);

}  // namespace rce
