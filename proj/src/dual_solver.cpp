#include "rce/dual_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rce/kernels.hpp"

namespace rce {

namespace {

constexpr double kRankRelTol = 1e-14;  // eigenvalue floor relative to trace/k
constexpr int kRefreshPeriod = 128;
// Atoms below this mass are invisible to the away/stopping criterion; their
// slackness residual is bounded by k * kDustU.
constexpr double kDustU = 1e-12;

std::int64_t default_max_iters(Eigen::Index n, int k) {
  const double ln = std::log(std::max<double>(static_cast<double>(n), 2.0));
  return static_cast<std::int64_t>(std::ceil(100.0 * k * std::max(ln, 1.0)));
}

struct RankCheck {
  bool deficient = false;
  int rank = 0;
  Eigen::MatrixXd basis;  // columns spanning the covered subspace
  double trace = 0.0;
};

RankCheck check_rank(const Eigen::MatrixXd& moment) {
  RankCheck rc;
  const int k = static_cast<int>(moment.rows());
  rc.trace = moment.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(moment);
  const double thr = kRankRelTol * std::max(rc.trace, 0.0) / k;
  std::vector<int> kept;
  for (int i = 0; i < k; ++i)
    if (es.eigenvalues()(i) > thr) kept.push_back(i);
  rc.rank = static_cast<int>(kept.size());
  rc.deficient = rc.rank < k;
  if (rc.deficient) {
    rc.basis.resize(k, rc.rank);
    for (int j = 0; j < rc.rank; ++j)
      rc.basis.col(j) = es.eigenvectors().col(kept[static_cast<std::size_t>(j)]);
  }
  return rc;
}

// State of the origin-centered ascent in the unit-mass normalization
// (sum u = 1); output weights are k * u. Between refreshes the mass vector is
// tracked as phi * uraw (a scalar decay plus per-step point updates), and
// leverages are maintained only for a working set of candidate atoms: the
// current support plus the highest-leverage points. Full passes happen at
// refresh and certification time only.
struct OriginState {
  Eigen::VectorXd uraw;
  double phi = 1.0;
  Eigen::MatrixXd minv;
  double logdet = 0.0;  // of the unit-mass moment

  std::vector<Eigen::Index> ws;  // ascending row indices into the point set
  RowMatrixXd ws_pts;            // compact copy of those rows
  Eigen::VectorXd ws_lev;        // their leverages (optimum value is k)

  Eigen::VectorXd full_lev;  // valid right after a refresh
  double full_eps = std::numeric_limits<double>::infinity();

  double u_of(Eigen::Index i) const { return phi * uraw(i); }
  Eigen::VectorXd materialize() const { return phi * uraw; }
};

// Full recompute from the mass vector; also rebuilds the working set and the
// exact two-sided certificate. Returns false if the moment loses rank.
bool rebuild(const PointSet& a, double ridge_total, OriginState& st) {
  const auto n = static_cast<std::size_t>(a.size());
  const auto k = static_cast<std::size_t>(a.dim());
  const double kd = static_cast<double>(a.dim());

  st.uraw = st.materialize();
  st.phi = 1.0;
  RowMatrixXd m(a.dim(), a.dim());
  kernels::weighted_moment(a.data(), n, k, st.uraw.data(), m.data());
  Eigen::MatrixXd moment = m;
  if (ridge_total > 0.0) moment.diagonal().array() += ridge_total;
  Eigen::LLT<Eigen::MatrixXd> llt(moment);
  if (llt.info() != Eigen::Success) return false;
  st.logdet = 0.0;
  for (Eigen::Index i = 0; i < moment.rows(); ++i)
    st.logdet += 2.0 * std::log(llt.matrixL()(i, i));
  if (!std::isfinite(st.logdet)) return false;
  st.minv = llt.solve(Eigen::MatrixXd::Identity(moment.rows(), moment.cols()));

  st.full_lev.resize(a.size());
  const RowMatrixXd minv_rm = st.minv;
  kernels::quad_forms(a.data(), n, k, minv_rm.data(), nullptr,
                      st.full_lev.data());

  // Exact certificate over all points / all supported atoms.
  double max_lev = -std::numeric_limits<double>::infinity();
  double min_sup = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    max_lev = std::max(max_lev, st.full_lev(i));
    if (st.uraw(i) > kDustU) min_sup = std::min(min_sup, st.full_lev(i));
  }
  st.full_eps = std::max(max_lev / kd - 1.0,
                         min_sup == std::numeric_limits<double>::infinity()
                             ? 0.0
                             : 1.0 - min_sup / kd);

  // Working set: support atoms plus the top-leverage points.
  const std::size_t extra =
      std::max<std::size_t>(256, 16 * static_cast<std::size_t>(a.dim()));
  std::vector<char> in_ws(n, 0);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (st.uraw(i) > kDustU) in_ws[static_cast<std::size_t>(i)] = 1;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index top =
      std::min<Eigen::Index>(static_cast<Eigen::Index>(extra), a.size());
  std::partial_sort(order.begin(), order.begin() + top, order.end(),
                    [&](Eigen::Index x, Eigen::Index y) {
                      if (st.full_lev(x) != st.full_lev(y))
                        return st.full_lev(x) > st.full_lev(y);
                      return a.id(x) < a.id(y);
                    });
  for (Eigen::Index t = 0; t < top; ++t)
    in_ws[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = 1;

  st.ws.clear();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (in_ws[static_cast<std::size_t>(i)]) st.ws.push_back(i);
  st.ws_pts.resize(static_cast<Eigen::Index>(st.ws.size()), a.dim());
  st.ws_lev.resize(static_cast<Eigen::Index>(st.ws.size()));
  for (std::size_t t = 0; t < st.ws.size(); ++t) {
    st.ws_pts.row(static_cast<Eigen::Index>(t)) = a.points().row(st.ws[t]);
    st.ws_lev(static_cast<Eigen::Index>(t)) = st.full_lev(st.ws[t]);
  }
  return true;
}

// Deterministic spread initialization: walk the coordinate axes, projecting
// out directions already covered, and pick the extreme point pair along each.
// Returns false when the picked atoms do not span (caller falls back).
bool ky_init(const PointSet& a, Eigen::VectorXd& u0) {
  const Eigen::Index n = a.size();
  const int k = a.dim();
  Eigen::MatrixXd ortho(k, 0);
  std::vector<Eigen::Index> chosen;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd s(n);
  for (int axis = 0; axis < k; ++axis) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(k, axis);
    if (ortho.cols() > 0) v -= ortho * (ortho.transpose() * v);
    const double nv = v.norm();
    if (nv < 1e-10) continue;
    v /= nv;
    kernels::dot_rows(a.data(), static_cast<std::size_t>(n),
                      static_cast<std::size_t>(k), v.data(), s.data());
    Eigen::Index jmax = 0, jmin = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (s(i) > s(jmax) || (s(i) == s(jmax) && a.id(i) < a.id(jmax))) jmax = i;
      if (s(i) < s(jmin) || (s(i) == s(jmin) && a.id(i) < a.id(jmin))) jmin = i;
    }
    for (Eigen::Index j : {jmax, jmin}) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      taken[static_cast<std::size_t>(j)] = 1;
      chosen.push_back(j);
      Eigen::VectorXd q = a.point(j);
      if (ortho.cols() > 0) q -= ortho * (ortho.transpose() * q);
      const double nq = q.norm();
      if (nq > 1e-10 * std::max(1.0, a.point(j).norm())) {
        ortho.conservativeResize(k, ortho.cols() + 1);
        ortho.col(ortho.cols() - 1) = q / nq;
      }
    }
  }
  if (ortho.cols() < k) return false;
  u0 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j : chosen)
    u0(j) = 1.0 / static_cast<double>(chosen.size());
  return true;
}

// Lowest-id tie break keeps runs reproducible across scan orders.
struct WsScan {
  Eigen::Index plus = -1;   // compact index of the leverage argmax
  Eigen::Index minus = -1;  // compact index of the support argmin
};

WsScan scan_ws(const PointSet& a, const OriginState& st) {
  WsScan out;
  for (std::size_t t = 0; t < st.ws.size(); ++t) {
    const auto ct = static_cast<Eigen::Index>(t);
    const Eigen::Index row = st.ws[t];
    const double lev = st.ws_lev(ct);
    if (out.plus < 0 || lev > st.ws_lev(out.plus) ||
        (lev == st.ws_lev(out.plus) && a.id(row) < a.id(st.ws[static_cast<std::size_t>(out.plus)])))
      out.plus = ct;
    if (st.u_of(row) > kDustU) {
      if (out.minus < 0 || lev < st.ws_lev(out.minus) ||
          (lev == st.ws_lev(out.minus) &&
           a.id(row) < a.id(st.ws[static_cast<std::size_t>(out.minus)])))
        out.minus = ct;
    }
  }
  return out;
}

// An eta-approximate optimum can exceed the w <= 1 box by O(eta); the box is
// valid at the true optimum, so clip the excess and hand it to atoms with
// headroom, proportionally to their slack.
void project_weight_box(Eigen::VectorXd& w) {
  double excess = 0.0;
  double headroom = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 1.0) {
      excess += w(i) - 1.0;
      w(i) = 1.0;
    } else {
      headroom += 1.0 - w(i);
    }
  }
  if (excess <= 0.0 || headroom <= excess) return;
  const double rate = excess / headroom;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) < 1.0) w(i) += rate * (1.0 - w(i));
}

DualSolution finalize(const PointSet& a, const OriginState& st,
                      const SolverConfig& cfg, bool certified,
                      double ridge_total) {
  const int k = a.dim();
  DualSolution sol;
  sol.weights = static_cast<double>(k) * st.materialize();
  project_weight_box(sol.weights);
  RowMatrixXd m(k, k);
  kernels::weighted_moment(a.data(), static_cast<std::size_t>(a.size()),
                           static_cast<std::size_t>(k), sol.weights.data(),
                           m.data());
  sol.moment = m;
  if (ridge_total > 0.0)
    sol.moment.diagonal().array() += k * ridge_total;

  // Report logdet and leverages against the projected weights.
  Eigen::LLT<Eigen::MatrixXd> llt(sol.moment);
  if (llt.info() == Eigen::Success) {
    sol.logdet = 0.0;
    for (int i = 0; i < k; ++i)
      sol.logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const Eigen::MatrixXd minv =
        llt.solve(Eigen::MatrixXd::Identity(k, k));
    const RowMatrixXd minv_rm = minv;
    sol.leverages.resize(a.size());
    kernels::quad_forms(a.data(), static_cast<std::size_t>(a.size()),
                        static_cast<std::size_t>(k), minv_rm.data(), nullptr,
                        sol.leverages.data());
    sol.leverages *= static_cast<double>(k);
  } else {
    sol.logdet = st.logdet + k * std::log(static_cast<double>(k));
    sol.leverages = st.full_lev.size() == a.size()
                        ? st.full_lev
                        : Eigen::VectorXd::Zero(a.size());
  }
  sol.max_leverage = sol.leverages.maxCoeff();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (sol.weights(i) > cfg.support_threshold)
      sol.support_ids.push_back(a.id(i));
  sol.certified = certified;
  return sol;
}

DualSolution solve_origin_k1(const PointSet& a, const SolverConfig& cfg) {
  Eigen::Index best = -1;
  double best_sq = -1.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double sq = a.points()(i, 0) * a.points()(i, 0);
    if (sq > best_sq || (sq == best_sq && best >= 0 && a.id(i) < a.id(best))) {
      best = i;
      best_sq = sq;
    }
  }
  if (best_sq <= 0.0)
    throw RankDeficient(0, Eigen::MatrixXd(1, 0),
                        "solve_dual_origin: all points are zero");
  OriginState st;
  st.uraw = Eigen::VectorXd::Zero(a.size());
  st.uraw(best) = 1.0;
  st.phi = 1.0;
  st.logdet = std::log(best_sq);
  st.full_lev = a.points().col(0).array().square() / best_sq;
  return finalize(a, st, cfg, true, 0.0);
}

}  // namespace

DualSolution solve_dual_origin(const PointSet& a, const SolverConfig& cfg,
                               const Eigen::VectorXd* warm_weights) {
  const Eigen::Index n = a.size();
  const int k = a.dim();
  if (n == 0) throw Error("solve_dual_origin: empty point set");
  const double kd = static_cast<double>(k);

  // Span check on the uniform moment, which has the largest possible support.
  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
  RowMatrixXd m0(k, k);
  kernels::weighted_moment(a.data(), static_cast<std::size_t>(n),
                           static_cast<std::size_t>(k), uniform.data(),
                           m0.data());
  const RankCheck rc = check_rank(m0);
  double ridge_total = 0.0;
  if (rc.deficient) {
    if (cfg.ridge <= 0.0)
      throw RankDeficient(rc.rank, rc.basis,
                          "solve_dual_origin: points do not span the space");
    ridge_total = cfg.ridge * rc.trace / k;
  }

  if (k == 1 && ridge_total == 0.0) return solve_origin_k1(a, cfg);

  OriginState st;
  st.phi = 1.0;
  bool ready = false;
  if (warm_weights && warm_weights->size() == n &&
      warm_weights->minCoeff() >= 0.0 && warm_weights->sum() >= 0.2 * kd) {
    // A warm vector that kept a real fraction of its mass restarts well; one
    // whose support was just removed is numerical dust and converges worse
    // than a fresh start.
    st.uraw = *warm_weights / warm_weights->sum();
    ready = rebuild(a, ridge_total, st);
  }
  if (!ready && cfg.ky_init && ridge_total == 0.0) {
    if (ky_init(a, st.uraw)) ready = rebuild(a, ridge_total, st);
  }
  if (!ready) {
    st.uraw = uniform;
    st.phi = 1.0;
    ready = rebuild(a, ridge_total, st);
  }
  if (!ready)
    throw RankDeficient(rc.rank, rc.basis,
                        "solve_dual_origin: moment factorization failed");

  const std::int64_t max_iters =
      cfg.max_iters > 0 ? cfg.max_iters : default_max_iters(n, k);
  Eigen::VectorXd sbuf(n);
  int since_refresh = 0;
  bool certified = st.full_eps <= cfg.eta;
  // Ill-conditioned instances can hit a rounding floor above eta; stop once
  // the certificate has made no headway for a long stretch instead of
  // burning the whole iteration budget.
  double best_eps = std::numeric_limits<double>::infinity();
  std::int64_t best_eps_iter = 0;
  constexpr std::int64_t kStallWindow = 2000;

  for (std::int64_t iter = 0; !certified && iter < max_iters; ++iter) {
    const WsScan scan = scan_ws(a, st);
    const double eps_plus = st.ws_lev(scan.plus) / kd - 1.0;
    const double eps_minus =
        scan.minus >= 0 ? 1.0 - st.ws_lev(scan.minus) / kd : 0.0;

    const double eps = std::max(eps_plus, eps_minus);
    if (eps < 0.999 * best_eps) {
      best_eps = eps;
      best_eps_iter = iter;
    } else if (iter - best_eps_iter > kStallWindow) {
      break;
    }

    if (eps <= cfg.eta) {
      // The working set looks optimal; certify against a full refresh.
      if (!rebuild(a, ridge_total, st)) break;
      since_refresh = 0;
      if (st.full_eps <= cfg.eta) {
        certified = true;
        break;
      }
      continue;
    }

    const bool take_plus =
        eps_plus >= eps_minus || scan.minus < 0 || scan.minus == scan.plus;

    if (ridge_total > 0.0) {
      // Ridge breaks the rank-one structure; take a backtracked plus/away
      // step on the exact objective instead.
      const Eigen::Index j = st.ws[static_cast<std::size_t>(
          take_plus ? scan.plus : scan.minus)];
      const double g =
          st.ws_lev(take_plus ? scan.plus : scan.minus);
      double lam = take_plus
                       ? (g - kd) / (kd * (g - 1.0))
                       : std::max((g - kd) / (kd * std::max(g - 1.0, 1e-9)),
                                  -st.u_of(j) / (1.0 - st.u_of(j)));
      const double old_logdet = st.logdet;
      const Eigen::VectorXd old_u = st.materialize();
      bool accepted = false;
      for (int tries = 0; tries < 30; ++tries) {
        st.uraw = (1.0 - lam) * old_u;
        st.uraw(j) += lam;
        if (st.uraw(j) < 0.0) st.uraw(j) = 0.0;
        st.phi = 1.0;
        if (rebuild(a, ridge_total, st) && st.logdet >= old_logdet - 1e-15) {
          accepted = true;
          break;
        }
        lam *= 0.5;
      }
      if (!accepted) {
        st.uraw = old_u;
        st.phi = 1.0;
        rebuild(a, ridge_total, st);
        break;
      }
      since_refresh = 0;
      certified = st.full_eps <= cfg.eta;
      continue;
    }

    if (take_plus) {
      // Classical step toward the worst-covered atom.
      const Eigen::Index jc = scan.plus;
      const Eigen::Index j = st.ws[static_cast<std::size_t>(jc)];
      const double g = st.ws_lev(jc);
      if (g <= kd) break;  // nothing to gain
      const double lambda = (g - kd) / (kd * (g - 1.0));
      const double s = 1.0 - lambda + lambda * g;
      if (!(s > 1e-300) || !(1.0 - lambda > 1e-300)) {
        if (!rebuild(a, ridge_total, st)) break;
        since_refresh = 0;
        continue;
      }
      const Eigen::VectorXd v = st.minv * a.point(j);
      kernels::dot_rows(st.ws_pts.data(), st.ws.size(),
                        static_cast<std::size_t>(k), v.data(), sbuf.data());
      kernels::rank1_leverage_update(st.ws_lev.data(), sbuf.data(),
                                     st.ws.size(), lambda / s,
                                     1.0 / (1.0 - lambda));
      st.minv -= (lambda / s) * (v * v.transpose());
      st.minv /= (1.0 - lambda);
      st.logdet += (kd - 1.0) * std::log(1.0 - lambda) + std::log(s);
      const double uj_new = (1.0 - lambda) * st.u_of(j) + lambda;
      st.phi *= (1.0 - lambda);
      st.uraw(j) = uj_new <= 1e-300 ? 0.0 : uj_new / st.phi;
    } else {
      // Pairwise step: shift mass from the lowest-leverage support atom to
      // the leverage argmax. Rank-two update with a closed-form line search;
      // unlike plus/away steps it leaves every other atom's mass unchanged.
      const Eigen::Index jpc = scan.plus, jmc = scan.minus;
      const Eigen::Index jplus = st.ws[static_cast<std::size_t>(jpc)];
      const Eigen::Index jminus = st.ws[static_cast<std::size_t>(jmc)];
      const double p = st.ws_lev(jpc);
      const double q = st.ws_lev(jmc);
      const Eigen::VectorXd vm = st.minv * a.point(jminus);
      const double r = a.point(jplus).dot(vm);
      const double det2 = p * q - r * r;  // > 0 unless the atoms are parallel
      const double umin = st.u_of(jminus);
      double delta;
      if (det2 > 1e-300) {
        delta = std::min((p - q) / (2.0 * det2), umin);
        // Keep the determinant ratio f = 1 + d(p-q) - d^2 det2 above a floor.
        const double disc = (p - q) * (p - q) + 4.0 * det2 * (1.0 - 1e-9);
        const double dmax = ((p - q) + std::sqrt(disc)) / (2.0 * det2);
        delta = std::min(delta, 0.999 * dmax);
      } else {
        delta = umin;
      }
      if (!(delta > 0.0)) {
        if (!rebuild(a, ridge_total, st)) break;
        since_refresh = 0;
        continue;
      }
      const double f =
          1.0 + delta * (p - q) - delta * delta * std::max(det2, 0.0);
      if (!(f > 1e-300)) {
        if (!rebuild(a, ridge_total, st)) break;
        since_refresh = 0;
        continue;
      }
      // Add delta at jplus ...
      const double sp = 1.0 + delta * p;
      const Eigen::VectorXd vp = st.minv * a.point(jplus);
      kernels::dot_rows(st.ws_pts.data(), st.ws.size(),
                        static_cast<std::size_t>(k), vp.data(), sbuf.data());
      kernels::rank1_leverage_update(st.ws_lev.data(), sbuf.data(),
                                     st.ws.size(), delta / sp, 1.0);
      st.minv -= (delta / sp) * (vp * vp.transpose());
      // ... then remove delta at jminus.
      const Eigen::VectorXd vm2 = st.minv * a.point(jminus);
      const double q2 = a.point(jminus).dot(vm2);
      const double sm = 1.0 - delta * q2;
      if (!(sm > 1e-300)) {
        if (!rebuild(a, ridge_total, st)) break;
        since_refresh = 0;
        continue;
      }
      kernels::dot_rows(st.ws_pts.data(), st.ws.size(),
                        static_cast<std::size_t>(k), vm2.data(), sbuf.data());
      kernels::rank1_leverage_update(st.ws_lev.data(), sbuf.data(),
                                     st.ws.size(), -delta / sm, 1.0);
      st.minv += (delta / sm) * (vm2 * vm2.transpose());
      st.logdet += std::log(sp) + std::log(sm);
      st.uraw(jplus) += delta / st.phi;
      const double um_new = umin - delta;
      st.uraw(jminus) = um_new <= 1e-300 ? 0.0 : um_new / st.phi;
    }

    if (++since_refresh >= kRefreshPeriod || st.phi < 1e-280) {
      if (!rebuild(a, ridge_total, st)) break;
      since_refresh = 0;
      certified = st.full_eps <= cfg.eta;
    }
  }

  if (!certified) {
    // max_iters (or a numerical bailout): report against fresh state.
    if (since_refresh != 0 || st.full_lev.size() != n)
      rebuild(a, ridge_total, st);
    certified = st.full_eps <= cfg.eta;
  }
  return finalize(a, st, cfg, certified, ridge_total);
}

Ellipsoid extract_primal_origin(const DualSolution& sol) {
  const int k = static_cast<int>(sol.moment.rows());
  const double scale = std::max(1.0, sol.max_leverage / k);
  return Ellipsoid(Eigen::VectorXd::Zero(k), scale * sol.moment);
}

namespace {

MveeResult solve_mvee_degenerate(const PointSet& a, const SolverConfig& cfg);

MveeResult solve_mvee_full_rank(const PointSet& a, const DualSolution& dual) {
  const int d = a.dim();
  const double dp1 = d + 1.0;
  const Eigen::VectorXd c = dual.moment.col(d).head(d) / dp1;
  // Accumulate the centered moment directly; the Schur-complement subtraction
  // cancels catastrophically when the support clusters away from the origin.
  RowMatrixXd centered = a.points();
  centered.rowwise() -= c.transpose();
  RowMatrixXd m_rm(d, d);
  kernels::weighted_moment(centered.data(),
                           static_cast<std::size_t>(a.size()),
                           static_cast<std::size_t>(d), dual.weights.data(),
                           m_rm.data());
  Eigen::MatrixXd m = m_rm;
  // Radial rescale so every solved point satisfies the level-1 membership
  // despite the eta-approximate certificate: the worst quadratic form is
  // (max_leverage - 1) / d.
  const double scale =
      (d / dp1) * std::max(1.0, (dual.max_leverage - 1.0) / d);
  return {Ellipsoid(c, scale * m), dual};
}

}  // namespace

MveeResult solve_mvee(const PointSet& a, const SolverConfig& cfg,
                      const Eigen::VectorXd* warm_lifted_weights) {
  if (a.size() == 0) throw Error("solve_mvee: empty point set");
  const PointSet lifted = lift(a);
  try {
    DualSolution dual = solve_dual_origin(lifted, cfg, warm_lifted_weights);
    return solve_mvee_full_rank(a, dual);
  } catch (const RankDeficient&) {
    return solve_mvee_degenerate(a, cfg);
  }
}

namespace {

MveeResult solve_mvee_degenerate(const PointSet& a, const SolverConfig& cfg) {
  const int d = a.dim();
  const Eigen::Index n = a.size();
  const Eigen::VectorXd mean = a.points().colwise().mean().transpose();
  RowMatrixXd centered = a.points();
  centered.rowwise() -= mean.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() > 0
                          ? svd.singularValues()(0)
                          : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-12 * smax) ++rank;

  if (rank == 0) {
    // All points coincide: the zero-volume "ellipsoid" at that point.
    DualSolution dual;
    dual.weights = Eigen::VectorXd::Zero(n);
    dual.weights(0) = 1.0;
    const Eigen::VectorXd a0 = a.point(0);
    dual.moment = Eigen::MatrixXd::Constant(1, 1, a0.squaredNorm() + 1.0);
    dual.logdet = std::log(dual.moment(0, 0));
    dual.max_leverage = 1.0;
    dual.leverages = Eigen::VectorXd::Ones(n);
    dual.support_ids.push_back(a.id(0));
    dual.certified = true;
    return {Ellipsoid(mean, Eigen::MatrixXd::Zero(d, d)), std::move(dual)};
  }

  const Eigen::MatrixXd basis = svd.matrixV().leftCols(rank);
  RowMatrixXd projected = centered * basis;
  MveeResult inner = solve_mvee(PointSet(std::move(projected), a.ids()), cfg);
  const Eigen::VectorXd center = mean + basis * inner.ellipsoid.center();
  Eigen::MatrixXd shape = basis * inner.ellipsoid.shape() * basis.transpose();
  shape = ((shape + shape.transpose()) / 2.0).eval();
  return {Ellipsoid(center, std::move(shape)), std::move(inner.dual)};
}

// Free-center ascent state (unit-mass normalization). The moment here is the
// centered one, F = sum u (a - c)(a - c)^T; the optimum leverage value is d.
struct CenterState {
  Eigen::VectorXd u;
  Eigen::VectorXd c;
  Eigen::MatrixXd ginv;  // F^{-1}
  Eigen::VectorXd lev;   // (a_i - c)^T F^{-1} (a_i - c)
  double logdet = 0.0;   // of F
};

bool rebuild_center(const PointSet& a, CenterState& st) {
  const auto n = static_cast<std::size_t>(a.size());
  const auto k = static_cast<std::size_t>(a.dim());
  st.c = a.points().transpose() * st.u;
  RowMatrixXd centered = a.points();
  centered.rowwise() -= st.c.transpose();
  RowMatrixXd m(a.dim(), a.dim());
  kernels::weighted_moment(centered.data(), n, k, st.u.data(), m.data());
  Eigen::MatrixXd f = m;
  Eigen::LLT<Eigen::MatrixXd> llt(f);
  if (llt.info() != Eigen::Success) return false;
  st.logdet = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    st.logdet += 2.0 * std::log(llt.matrixL()(i, i));
  if (!std::isfinite(st.logdet)) return false;
  st.ginv = llt.solve(Eigen::MatrixXd::Identity(f.rows(), f.cols()));
  st.lev.resize(a.size());
  const RowMatrixXd ginv_rm = st.ginv;
  kernels::quad_forms(a.data(), n, k, ginv_rm.data(), st.c.data(),
                      st.lev.data());
  return true;
}

// Lowest-id tie break, matching the origin solver.
template <typename Better>
Eigen::Index scan_full(const PointSet& a, const Eigen::VectorXd& vals,
                       const Eigen::VectorXd* mask, Better better) {
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (mask && (*mask)(i) <= kDustU) continue;
    if (best < 0 || better(vals(i), vals(best)) ||
        (vals(i) == vals(best) && a.id(i) < a.id(best))) {
      best = i;
    }
  }
  return best;
}

}  // namespace

MveeResult solve_mvee_direct(const PointSet& a, const SolverConfig& cfg) {
  const Eigen::Index n = a.size();
  const int d = a.dim();
  if (n == 0) throw Error("solve_mvee_direct: empty point set");

  CenterState st;
  st.u = Eigen::VectorXd::Constant(n, 1.0 / n);
  {
    const Eigen::VectorXd mean = a.points().colwise().mean().transpose();
    RowMatrixXd centered = a.points();
    centered.rowwise() -= mean.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n);
    const RankCheck rc = check_rank(cov);
    if (rc.deficient)
      throw RankDeficient(rc.rank, rc.basis,
                          "solve_mvee_direct: points lie on an affine flat");
  }
  if (!rebuild_center(a, st))
    throw Error("solve_mvee_direct: initial factorization failed");

  const std::int64_t max_iters =
      cfg.max_iters > 0 ? cfg.max_iters : default_max_iters(n, d);
  const double dd = static_cast<double>(d);
  Eigen::VectorXd sbuf(n);
  int since_refresh = 0;
  bool certified = false;

  for (std::int64_t iter = 0; iter < max_iters; ++iter) {
    const Eigen::Index jp =
        scan_full(a, st.lev, nullptr, [](double x, double y) { return x > y; });
    const double eps_plus = st.lev(jp) / dd - 1.0;
    const Eigen::Index jm =
        scan_full(a, st.lev, &st.u, [](double x, double y) { return x < y; });
    const double eps_minus = jm >= 0 ? 1.0 - st.lev(jm) / dd : 0.0;

    if (std::max(eps_plus, eps_minus) <= cfg.eta) {
      if (since_refresh == 0) {
        certified = true;
        break;
      }
      if (!rebuild_center(a, st)) break;
      since_refresh = 0;
      continue;
    }

    Eigen::Index j;
    double lambda;
    if (eps_plus >= eps_minus) {
      j = jp;
      lambda = (st.lev(j) - dd) / ((dd + 1.0) * st.lev(j));
    } else {
      j = jm;
      const double uj = st.u(j);
      if (uj >= 1.0 - 1e-15) {
        j = jp;
        if (st.lev(j) <= dd) break;
        lambda = (st.lev(j) - dd) / ((dd + 1.0) * st.lev(j));
      } else {
        const double target = (st.lev(j) - dd) / ((dd + 1.0) * st.lev(j));
        const double floor_lam = (1e-9 - 1.0) / st.lev(j);
        lambda = std::max({target, -uj / (1.0 - uj), floor_lam});
      }
    }

    const double xi = st.lev(j);
    const double s1 = 1.0 + lambda * xi;
    if (!(s1 > 1e-12) || !(1.0 - lambda > 1e-300)) {
      if (!rebuild_center(a, st)) break;
      since_refresh = 0;
      continue;
    }

    const Eigen::VectorXd q = a.point(j) - st.c;
    const Eigen::VectorXd gq = st.ginv * q;
    kernels::dot_rows(a.data(), static_cast<std::size_t>(n),
                      static_cast<std::size_t>(d), gq.data(), sbuf.data());
    const double cgq = st.c.dot(gq);
    const double coef = lambda / s1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = sbuf(i) - cgq;
      const double t = st.lev(i) - 2.0 * lambda * r + lambda * lambda * xi;
      const double w = r - lambda * xi;
      st.lev(i) = (t - coef * w * w) / (1.0 - lambda);
    }
    st.ginv -= coef * (gq * gq.transpose());
    st.ginv /= (1.0 - lambda);
    st.logdet += dd * std::log(1.0 - lambda) + std::log(s1);
    st.c += lambda * q;
    st.u *= (1.0 - lambda);
    st.u(j) += lambda;
    if (st.u(j) < 1e-300) st.u(j) = 0.0;

    if (++since_refresh >= kRefreshPeriod) {
      if (!rebuild_center(a, st)) break;
      since_refresh = 0;
    }
  }

  if (!certified && rebuild_center(a, st)) {
    const Eigen::Index jp =
        scan_full(a, st.lev, nullptr, [](double x, double y) { return x > y; });
    const Eigen::Index jm =
        scan_full(a, st.lev, &st.u, [](double x, double y) { return x < y; });
    const double eps_plus = st.lev(jp) / dd - 1.0;
    const double eps_minus = jm >= 0 ? 1.0 - st.lev(jm) / dd : 0.0;
    certified = std::max(eps_plus, eps_minus) <= cfg.eta;
  }

  DualSolution sol;
  sol.weights = dd * st.u;
  project_weight_box(sol.weights);
  const Eigen::VectorXd center = a.points().transpose() * sol.weights / dd;
  RowMatrixXd centered = a.points();
  centered.rowwise() -= center.transpose();
  RowMatrixXd m(d, d);
  kernels::weighted_moment(centered.data(), static_cast<std::size_t>(n),
                           static_cast<std::size_t>(d), sol.weights.data(),
                           m.data());
  sol.moment = m;  // sum w (a-c)(a-c)^T
  Eigen::LLT<Eigen::MatrixXd> llt(sol.moment);
  if (llt.info() == Eigen::Success) {
    sol.logdet = 0.0;
    for (int i = 0; i < d; ++i)
      sol.logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const Eigen::MatrixXd minv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    const RowMatrixXd minv_rm = minv;
    sol.leverages.resize(n);
    kernels::quad_forms(a.data(), static_cast<std::size_t>(n),
                        static_cast<std::size_t>(d), minv_rm.data(),
                        center.data(), sol.leverages.data());
    sol.leverages *= dd;
  } else {
    sol.logdet = st.logdet + dd * std::log(dd);
    sol.leverages = st.lev;
  }
  sol.max_leverage = sol.leverages.maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i)
    if (sol.weights(i) > cfg.support_threshold)
      sol.support_ids.push_back(a.id(i));
  sol.certified = certified;

  const double scale = std::max(1.0, sol.max_leverage / dd);
  Ellipsoid e(center, scale * sol.moment);
  return {std::move(e), std::move(sol)};
}

std::vector<SlacknessRow> slackness_residuals(const DualSolution& sol,
                                              const PointSet& a) {
  const int k = static_cast<int>(sol.moment.rows());
  if (a.dim() != k)
    throw DimensionMismatch("slackness_residuals: dimension mismatch");
  if (sol.weights.size() != a.size())
    throw DimensionMismatch("slackness_residuals: weights/points mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(sol.moment);
  if (llt.info() != Eigen::Success)
    throw DegenerateEllipsoid("slackness_residuals: singular moment");
  const Eigen::MatrixXd minv =
      llt.solve(Eigen::MatrixXd::Identity(k, k));
  const RowMatrixXd minv_rm = minv;
  Eigen::VectorXd forms(a.size());
  kernels::quad_forms(a.data(), static_cast<std::size_t>(a.size()),
                      static_cast<std::size_t>(k), minv_rm.data(), nullptr,
                      forms.data());
  std::vector<SlacknessRow> rows;
  rows.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    SlacknessRow r;
    r.id = a.id(i);
    r.weight = sol.weights(i);
    r.leverage = k * forms(i);
    r.residual = r.weight * (r.leverage / k - 1.0);
    rows.push_back(r);
  }
  return rows;
}

double brascamp_lieb_gap(const Eigen::MatrixXd& p,
                         const std::vector<FrameAtom>& frame) {
  const Eigen::Index k = p.rows();
  if (p.cols() != k) throw DimensionMismatch("brascamp_lieb_gap: P not square");
  Eigen::MatrixXd iso = Eigen::MatrixXd::Zero(k, k);
  for (const auto& atom : frame) {
    if (atom.direction.size() != k)
      throw DimensionMismatch("brascamp_lieb_gap: direction dimension");
    if (std::abs(atom.direction.norm() - 1.0) > 1e-8)
      throw NotATightFrame("brascamp_lieb_gap: direction is not unit length");
    if (atom.weight <= 0.0)
      throw NotATightFrame("brascamp_lieb_gap: weights must be positive");
    iso += atom.weight * (atom.direction * atom.direction.transpose());
  }
  if ((iso - Eigen::MatrixXd::Identity(k, k)).norm() > 1e-6)
    throw NotATightFrame("brascamp_lieb_gap: frame does not resolve identity");
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success)
    throw Error("brascamp_lieb_gap: P must be positive definite");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double lhs = 0.0;
  for (const auto& atom : frame)
    lhs += atom.weight *
           std::log(atom.direction.dot(p * atom.direction));
  return lhs - logdet;
}

std::vector<FrameAtom> tight_frame_from_dual(const DualSolution& sol,
                                             const PointSet& a) {
  const int k = static_cast<int>(sol.moment.rows());
  if (a.dim() != k)
    throw DimensionMismatch("tight_frame_from_dual: dimension mismatch");
  if (sol.weights.size() != a.size())
    throw DimensionMismatch("tight_frame_from_dual: weights/points mismatch");

  // Support-restricted moment so the whitened atoms resolve the identity to
  // floating-point accuracy rather than to O(eta).
  std::vector<Eigen::Index> support;
  Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (sol.weights(i) > 1e-12) {
      support.push_back(i);
      ms += sol.weights(i) / k * (a.point(i) * a.point(i).transpose());
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ms);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error("tight_frame_from_dual: support does not span");
  const Eigen::MatrixXd whiten =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();

  std::vector<FrameAtom> frame;
  frame.reserve(support.size());
  for (Eigen::Index i : support) {
    Eigen::VectorXd b = whiten * a.point(i);
    const double norm2 = b.squaredNorm();
    FrameAtom atom;
    atom.weight = sol.weights(i) / k * norm2;
    atom.direction = b / std::sqrt(norm2);
    frame.push_back(std::move(atom));
  }
  return frame;
}

}  // namespace rce
