#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "rce/coverage.hpp"
#include "rce/point_set.hpp"
#include "rce/rng.hpp"

namespace rce {

struct SubspaceConfig {
  double gamma = 0.25;  // in (0, 1)
  double eps = 0.1;     // closeness parameter, in (0, 1)
  /// Defaults to eps^(4/gamma), which underflows for small gamma; experiments
  /// may override with any nonnegative value (a larger noise scale than the
  /// planted one is sound for the guarantees being checked; 0 skips the
  /// perturbation entirely).
  std::optional<double> eps_star_override;
  /// Expected outlier fraction; drives the ellipsoid stage's miscoverage.
  double alpha_hint = 0.05;
  AlgoConfig ellipsoid_cfg;
  std::uint64_t seed = 0;
};

struct SubspaceResult {
  Eigen::MatrixXd basis;  // orthonormal rows spanning the recovered subspace
  int dim = 0;
  Eigen::VectorXd distances;  // per original point, ||(I - P) a|| / ||a||
  std::int64_t close_count = 0;  // points with distance <= eps
  Ellipsoid ellipsoid;           // the intermediate origin-centered ellipsoid
  double eps_star = 0.0;         // noise scale actually used
  bool inputs_renormalized = false;
  bool sample_size_warning = false;  // n below d log(d / eps_star)
};

/// a_i + zeta_i with zeta ~ N(0, (eps_star^2 / d) I), then renormalized to
/// unit length. eps_star == 0 returns the (unit-normalized) input unchanged
/// without consuming randomness. Inputs that are not unit length are
/// normalized first; *renormalized reports when that happened.
/// Throws ZeroVector if a perturbed point has vanishing norm.
PointSet perturb_normalize(const PointSet& a, double eps_star, Rng& rng,
                           bool* renormalized = nullptr);

/// Perturb, symmetrize, run the origin-centered coverage pipeline, and keep
/// the eigendirections of the resulting shape with eigenvalue >= eps^2.
/// Distances are reported for the original (unperturbed) points.
/// Propagates NoFeasibleCandidate from the ellipsoid stage.
SubspaceResult recover_subspace(const PointSet& a, const SubspaceConfig& cfg);

struct FatnessReport {
  double lambda_min = 0.0;
  double bound = 0.0;  // eps_star^2 / (256 d)
  /// False when the hypothesis is not met (no perturbation, or the covering
  /// ellipsoid came out degenerate); the bound check is skipped then.
  bool applicable = false;
};

/// Smallest shape eigenvalue of the origin-centered ellipsoid covering at
/// least coverage_fraction of the perturbed points, against the
/// anti-concentration floor eps_star^2 / (256 d). coverage_fraction >= 1
/// uses the enclosing ellipsoid of all points; smaller fractions run the
/// origin pipeline at alpha = 1 - coverage_fraction.
FatnessReport fatness_min_eigenvalue(const PointSet& a_perturbed,
                                     double coverage_fraction,
                                     double eps_star,
                                     const AlgoConfig& cfg = {});

}  // namespace rce
