#include "rce/subspace.hpp"

#include <cmath>

#include "rce/dual_solver.hpp"

namespace rce {

namespace {

PointSet unit_normalize(const PointSet& a, bool* renormalized) {
  bool touched = false;
  RowMatrixXd pts = a.points();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double norm = pts.row(i).norm();
    if (norm < 1e-300)
      throw ZeroVector("subspace: zero input vector cannot be normalized");
    if (std::abs(norm - 1.0) > 1e-8) {
      pts.row(i) /= norm;
      touched = true;
    }
  }
  if (renormalized) *renormalized = touched;
  if (!touched) return a;
  return PointSet(std::move(pts), a.ids());
}

}  // namespace

PointSet perturb_normalize(const PointSet& a, double eps_star, Rng& rng,
                           bool* renormalized) {
  if (eps_star < 0.0) throw Error("perturb_normalize: eps_star must be >= 0");
  PointSet unit = unit_normalize(a, renormalized);
  if (eps_star == 0.0) return unit;

  const int d = unit.dim();
  const double sigma = eps_star / std::sqrt(static_cast<double>(d));
  RowMatrixXd pts = unit.points();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) += sigma * rng.normal();
    const double norm = pts.row(i).norm();
    if (norm < 1e-300)
      throw ZeroVector("perturb_normalize: perturbed point has zero norm");
    pts.row(i) /= norm;
  }
  return PointSet(std::move(pts), unit.ids());
}

SubspaceResult recover_subspace(const PointSet& a, const SubspaceConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error("recover_subspace: gamma must be in (0, 1)");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0))
    throw Error("recover_subspace: eps must be in (0, 1)");
  // 0 is allowed and skips the perturbation (exact-subspace inputs).
  if (cfg.eps_star_override && *cfg.eps_star_override < 0.0)
    throw Error("recover_subspace: eps_star override must be >= 0");

  const int d = a.dim();
  const double eps_star = cfg.eps_star_override
                              ? *cfg.eps_star_override
                              : std::pow(cfg.eps, 4.0 / cfg.gamma);

  bool renormalized = false;
  Rng rng(cfg.seed);
  const PointSet original = unit_normalize(a, &renormalized);
  const PointSet perturbed = perturb_normalize(original, eps_star, rng);
  const PointSet sym = symmetrize(perturbed);

  AlgoConfig ecfg = cfg.ellipsoid_cfg;
  ecfg.alpha = cfg.alpha_hint;
  ecfg.gamma = cfg.gamma;
  {
    std::uint64_t s = cfg.seed ^ 0xa5b35705987c1fd3ULL;
    ecfg.seed = detail::splitmix64(s);
  }
  CoverageOutput pipeline = approximate_coverage_ellipsoid_origin(sym, ecfg);
  const Ellipsoid& hat = pipeline.best().ellipsoid;

  // Keep the directions whose squared semi-axis clears eps^2.
  const double thr = cfg.eps * cfg.eps;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < hat.eigenvalues().size(); ++i)
    if (hat.eigenvalues()(i) >= thr) kept.push_back(i);

  SubspaceResult res{Eigen::MatrixXd(), 0, Eigen::VectorXd(), 0, hat,
                     eps_star, renormalized, false};
  res.dim = static_cast<int>(kept.size());
  res.basis.resize(res.dim, d);
  for (int r = 0; r < res.dim; ++r)
    res.basis.row(r) = hat.eigenvectors().col(kept[static_cast<std::size_t>(r)]).transpose();

  res.distances.resize(original.size());
  for (Eigen::Index i = 0; i < original.size(); ++i) {
    const Eigen::VectorXd x = original.point(i);
    const Eigen::VectorXd proj = res.basis.transpose() * (res.basis * x);
    res.distances(i) = (x - proj).norm() / x.norm();
    if (res.distances(i) <= cfg.eps) ++res.close_count;
  }

  if (eps_star > 0.0) {
    const double needed = d * std::log(static_cast<double>(d) / eps_star);
    res.sample_size_warning = static_cast<double>(original.size()) < needed;
  }
  return res;
}

FatnessReport fatness_min_eigenvalue(const PointSet& a_perturbed,
                                     double coverage_fraction,
                                     double eps_star, const AlgoConfig& cfg) {
  const int d = a_perturbed.dim();
  FatnessReport rep;
  rep.bound = eps_star * eps_star / (256.0 * d);

  Ellipsoid shape(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d));
  const double n = static_cast<double>(a_perturbed.size());
  if (coverage_fraction >= 1.0 - 0.5 / n) {
    DualSolution dual = [&]() {
      try {
        return solve_dual_origin(a_perturbed, cfg.solver);
      } catch (const RankDeficient&) {
        return DualSolution{};
      }
    }();
    if (dual.weights.size() == 0) {
      rep.lambda_min = 0.0;
      rep.applicable = false;
      return rep;
    }
    shape = extract_primal_origin(dual);
  } else {
    AlgoConfig acfg = cfg;
    acfg.alpha = 1.0 - coverage_fraction;
    CoverageOutput out = approximate_coverage_ellipsoid_origin(a_perturbed, acfg);
    shape = out.best().ellipsoid;
  }

  rep.lambda_min = shape.eigenvalues()(0);
  rep.applicable = eps_star > 0.0 && !shape.degenerate();
  return rep;
}

}  // namespace rce
