#include "rce/coverage.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "rce/rng.hpp"

namespace rce {

namespace {

std::uint64_t mix_id(std::int64_t id) {
  std::uint64_t s = static_cast<std::uint64_t>(id) + 0x632be59bd9b4e019ULL;
  return detail::splitmix64(s);
}

struct BallInternal {
  BallSpec spec;
  Eigen::Index center_pos = 0;
  std::uint64_t member_hash = 0;
};

struct BallScan {
  std::vector<BallInternal> deduped;  // sorted by (center_id, radius_id)
  std::size_t retained = 0;
};

BallScan scan_balls(const PointSet& a, double alpha) {
  const Eigen::Index n = a.size();
  const double floor_count = (1.0 - alpha) * static_cast<double>(n) - 1e-9;
  BallScan out;
  std::unordered_map<std::uint64_t, std::size_t> seen;  // hash -> index in deduped

  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      dist[static_cast<std::size_t>(j)] =
          (a.points().row(j) - a.points().row(i)).norm();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      const double dx = dist[static_cast<std::size_t>(x)];
      const double dy = dist[static_cast<std::size_t>(y)];
      if (dx != dy) return dx < dy;
      return a.id(x) < a.id(y);
    });

    std::uint64_t hash = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
      hash += mix_id(a.id(order[static_cast<std::size_t>(t)]));
      const double r = dist[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
      const bool group_end =
          t + 1 == n ||
          dist[static_cast<std::size_t>(order[static_cast<std::size_t>(t + 1)])] > r;
      if (!group_end) continue;
      const std::int64_t count = t + 1;
      if (static_cast<double>(count) < floor_count) continue;
      ++out.retained;
      // Radius-defining id: lowest id at this exact distance.
      Eigen::Index first_of_group = t;
      while (first_of_group > 0 &&
             dist[static_cast<std::size_t>(order[static_cast<std::size_t>(first_of_group - 1)])] == r)
        --first_of_group;
      BallInternal ball;
      ball.spec.center_id = a.id(i);
      ball.spec.radius_id = a.id(order[static_cast<std::size_t>(first_of_group)]);
      ball.spec.radius = r;
      ball.spec.member_count = count;
      ball.center_pos = i;
      ball.member_hash = hash;
      auto it = seen.find(hash);
      if (it == seen.end()) {
        seen.emplace(hash, out.deduped.size());
        out.deduped.push_back(ball);
      } else {
        BallInternal& kept = out.deduped[it->second];
        if (std::make_pair(ball.spec.center_id, ball.spec.radius_id) <
            std::make_pair(kept.spec.center_id, kept.spec.radius_id))
          kept = ball;
      }
    }
  }
  std::sort(out.deduped.begin(), out.deduped.end(),
            [](const BallInternal& x, const BallInternal& y) {
              return std::make_pair(x.spec.center_id, x.spec.radius_id) <
                     std::make_pair(y.spec.center_id, y.spec.radius_id);
            });
  return out;
}

void apply_ball_cap(std::vector<BallInternal>& balls, std::size_t cap,
                    Eigen::Index n) {
  if (cap == 0 || balls.size() <= cap) return;
  // Always keep one whole-set ball so a full-coverage candidate exists, then
  // prefer small radii: they are the volume-pinning branches.
  std::size_t whole = balls.size();
  for (std::size_t i = 0; i < balls.size(); ++i) {
    if (balls[i].spec.member_count == n) {
      whole = i;
      break;
    }
  }
  std::vector<std::size_t> idx(balls.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    if (balls[x].spec.radius != balls[y].spec.radius)
      return balls[x].spec.radius < balls[y].spec.radius;
    return std::make_pair(balls[x].spec.center_id, balls[x].spec.radius_id) <
           std::make_pair(balls[y].spec.center_id, balls[y].spec.radius_id);
  });
  std::vector<bool> keep(balls.size(), false);
  std::size_t kept = 0;
  if (whole < balls.size()) {
    keep[whole] = true;
    kept = 1;
  }
  for (std::size_t r = 0; r < idx.size() && kept < cap; ++r) {
    if (!keep[idx[r]]) {
      keep[idx[r]] = true;
      ++kept;
    }
  }
  std::vector<BallInternal> pruned;
  pruned.reserve(kept);
  for (std::size_t i = 0; i < balls.size(); ++i)
    if (keep[i]) pruned.push_back(balls[i]);
  balls = std::move(pruned);
}

Ellipsoid origin_flat_ellipsoid(const PointSet& pts, const RankDeficient& rd,
                                const SolverConfig& cfg) {
  const int d = pts.dim();
  if (rd.rank() == 0)
    return Ellipsoid(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d));
  const Eigen::MatrixXd& basis = rd.span_basis();
  RowMatrixXd projected = pts.points() * basis;
  PointSet inner(std::move(projected), pts.ids());
  Eigen::MatrixXd inner_shape;
  try {
    DualSolution ds = solve_dual_origin(inner, cfg);
    inner_shape = extract_primal_origin(ds).shape();
  } catch (const RankDeficient& rd2) {
    inner_shape = origin_flat_ellipsoid(inner, rd2, cfg).shape();
  }
  Eigen::MatrixXd shape = basis * inner_shape * basis.transpose();
  shape = ((shape + shape.transpose()) / 2.0).eval();
  return Ellipsoid(Eigen::VectorXd::Zero(d), std::move(shape));
}

struct BranchTask {
  std::size_t ball_index = 0;  // index into the run list
  int restart = 0;
};

struct BranchResult {
  std::vector<CandidateRecord> candidates;
  BranchStat stat;
};

struct PipelineParams {
  bool lifted = true;
  std::int64_t rounds_limit = 1;   // J
  std::int64_t cap_points = 0;
  const std::unordered_set<std::int64_t>* tracked = nullptr;
};

double tracked_mass(const DualSolution& dual, const PointSet& survivors,
                    const std::unordered_set<std::int64_t>* tracked) {
  if (!tracked) return std::numeric_limits<double>::quiet_NaN();
  double mass = 0.0;
  for (Eigen::Index i = 0; i < survivors.size(); ++i)
    if (tracked->count(survivors.id(i))) mass += dual.weights(i);
  return mass;
}

CandidateRecord make_record(Ellipsoid e, const PointSet& a_full,
                            const AlgoConfig& cfg,
                            std::pair<std::int64_t, std::int64_t> ball_id,
                            int round, int restart, double mass,
                            std::int64_t removed_before) {
  const CoverageResult cov = coverage(e, a_full, cfg.membership_slack);
  CandidateRecord rec{std::move(e), cov.count,
                      -std::numeric_limits<double>::infinity(), ball_id,
                      round, restart, mass, removed_before};
  if (!rec.ellipsoid.degenerate()) rec.log_volume = log_volume(rec.ellipsoid);
  return rec;
}

BranchResult run_branch(const PointSet& a_full, const BallInternal* ball,
                        std::size_t ball_index, int restart,
                        const AlgoConfig& cfg, const PipelineParams& pp) {
  BranchResult out;
  out.stat.ball_index = ball_index;
  out.stat.restart = restart;
  Rng rng = derive_stream(cfg.seed, ball_index, static_cast<std::uint64_t>(restart));

  // Ball-local frame: center at the origin, unit radius. MVEE is affinely
  // equivariant, so this only improves conditioning.
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(a_full.dim());
  double scale = 1.0;
  std::pair<std::int64_t, std::int64_t> ball_id{-1, -1};
  PointSet survivors(a_full.dim());
  if (pp.lifted && ball) {
    ball_id = {ball->spec.center_id, ball->spec.radius_id};
    out.stat.ball_id = ball_id;
    shift = a_full.point(ball->center_pos);
    scale = ball->spec.radius > 0.0 ? ball->spec.radius : 1.0;
    std::vector<Eigen::Index> members;
    for (Eigen::Index j = 0; j < a_full.size(); ++j)
      if ((a_full.points().row(j).transpose() - shift).norm() <=
          ball->spec.radius)
        members.push_back(j);
    RowMatrixXd local(static_cast<Eigen::Index>(members.size()), a_full.dim());
    std::vector<std::int64_t> ids;
    ids.reserve(members.size());
    Eigen::Index r = 0;
    for (Eigen::Index j : members) {
      local.row(r++) =
          (a_full.points().row(j).transpose() - shift).transpose() / scale;
      ids.push_back(a_full.id(j));
    }
    survivors = PointSet(std::move(local), std::move(ids));
  } else {
    survivors = a_full;
  }

  std::int64_t removed_total = 0;

  for (std::int64_t round = 1; round <= pp.rounds_limit; ++round) {
    if (removed_total > pp.cap_points) {
      out.stat.aborted_by_cap = true;
      break;
    }
    if (survivors.size() == 0) {
      out.stat.exhausted = true;
      break;
    }

    Ellipsoid cand(Eigen::VectorXd::Zero(a_full.dim()),
                   Eigen::MatrixXd::Zero(a_full.dim(), a_full.dim()));
    const DualSolution* dual_for_removal = nullptr;
    DualSolution dual;
    bool degenerate_round = false;

    // Rounds solve from scratch: a warm vector whose support was randomly
    // thinned converges worse than a fresh spread start.
    if (pp.lifted) {
      MveeResult res = solve_mvee(survivors, cfg.solver);
      degenerate_round = res.ellipsoid.degenerate();
      cand = Ellipsoid(shift + scale * res.ellipsoid.center(),
                       scale * scale * res.ellipsoid.shape());
      dual = std::move(res.dual);
      if (!degenerate_round) dual_for_removal = &dual;
    } else {
      try {
        dual = solve_dual_origin(survivors, cfg.solver);
        cand = extract_primal_origin(dual);
        dual_for_removal = &dual;
      } catch (const RankDeficient& rd) {
        cand = origin_flat_ellipsoid(survivors, rd, cfg.solver);
        degenerate_round = true;
      }
    }

    const double mass =
        dual_for_removal ? tracked_mass(*dual_for_removal, survivors, pp.tracked)
                         : std::numeric_limits<double>::quiet_NaN();
    CandidateRecord rec =
        make_record(std::move(cand), a_full, cfg, ball_id,
                    static_cast<int>(round), restart, mass, removed_total);
    if (!degenerate_round) {
      rec.dual_certified = dual.certified;
      rec.dual_max_leverage = dual.max_leverage;
    }
    out.candidates.push_back(std::move(rec));
    out.stat.rounds_run = static_cast<int>(round);

    if (degenerate_round) {
      // Nothing is removed on a rank-deficient round, so the branch state can
      // never change again.
      out.stat.ended_degenerate = true;
      break;
    }
    if (round == pp.rounds_limit) break;

    const std::vector<std::int64_t> removed_ids =
        removal_draw(dual_for_removal->weights, survivors, rng);
    if (removed_ids.empty()) continue;
    std::vector<Eigen::Index> removed;
    {
      std::unordered_set<std::int64_t> rem(removed_ids.begin(),
                                           removed_ids.end());
      for (Eigen::Index i = 0; i < survivors.size(); ++i)
        if (rem.count(survivors.id(i))) removed.push_back(i);
    }
    survivors = survivors.erase(removed);
    removed_total += static_cast<std::int64_t>(removed.size());
  }
  return out;
}

CoverageOutput run_pipeline(const PointSet& a, const AlgoConfig& cfg,
                            bool lifted) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw Error("coverage pipeline: alpha must be in (0, 1)");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error("coverage pipeline: gamma must be in (0, 1)");
  const Eigen::Index n = a.size();
  if (n == 0) throw Error("coverage pipeline: empty point set");
  const int d = a.dim();

  CoverageOutput out;

  // With fewer than one point of allowed miscoverage the answer is the plain
  // enclosing ellipsoid of everything: a single trivial branch.
  if (lifted && cfg.alpha * static_cast<double>(n) <= 1.0) {
    MveeResult res = solve_mvee(a, cfg.solver);
    out.candidates.push_back(make_record(
        std::move(res.ellipsoid), a, cfg, {-1, -1}, 1, 0,
        std::numeric_limits<double>::quiet_NaN(), 0));
    out.best_index = 0;
    out.balls_run = 1;
    out.restarts = 1;
    out.rounds_per_branch_limit = 1;
    BranchStat st;
    st.rounds_run = 1;
    out.branches.push_back(st);
    return out;
  }

  BallScan scan;
  if (lifted) {
    scan = scan_balls(a, cfg.alpha);
    out.balls_retained = scan.retained;
    out.balls_after_dedup = scan.deduped.size();
    apply_ball_cap(scan.deduped, cfg.ball_cap, n);
  } else {
    scan.deduped.push_back(BallInternal{});  // one branch family, no transform
  }
  out.balls_run = scan.deduped.size();

  const int restarts =
      cfg.restarts > 0
          ? cfg.restarts
          : std::max(1, static_cast<int>(std::ceil(
                            std::log2(std::max<double>(2.0, double(n))))));
  out.restarts = restarts;

  const double denom = cfg.gamma * (lifted ? d + 1.0 : double(d));
  const std::int64_t rounds_limit = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil(cfg.iter_const_c * cfg.alpha * double(n) / denom)));
  out.rounds_per_branch_limit = rounds_limit;

  const double cap_factor = cfg.removal_cap_factor >= 0.0
                                ? cfg.removal_cap_factor
                                : cfg.coverage_const_c2 * cfg.alpha / cfg.gamma;
  const std::int64_t cap_points =
      static_cast<std::int64_t>(std::floor(cap_factor * double(n)));
  out.removal_cap_points = cap_points;

  std::unordered_set<std::int64_t> tracked(cfg.tracked_ids.begin(),
                                           cfg.tracked_ids.end());
  PipelineParams pp;
  pp.lifted = lifted;
  pp.rounds_limit = rounds_limit;
  pp.cap_points = cap_points;
  pp.tracked = cfg.tracked_ids.empty() ? nullptr : &tracked;

  const std::size_t total =
      scan.deduped.size() * static_cast<std::size_t>(restarts);
  std::vector<BranchResult> results(total);
  int workers = cfg.threads;
  if (workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    workers = hw == 0 ? 1 : static_cast<int>(hw);
  }
  workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), total));

  const auto run_task = [&](std::size_t task) {
    const std::size_t ball_index = task / static_cast<std::size_t>(restarts);
    const int restart = static_cast<int>(task % static_cast<std::size_t>(restarts));
    const BallInternal* ball = lifted ? &scan.deduped[ball_index] : nullptr;
    results[task] = run_branch(a, ball, ball_index, restart, cfg, pp);
  };

  if (workers <= 1) {
    for (std::size_t t = 0; t < total; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int wkr = 0; wkr < workers; ++wkr) {
      pool.emplace_back([&]() {
        try {
          for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= total) return;
            run_task(t);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (auto& br : results) {
    out.branches.push_back(br.stat);
    for (auto& cand : br.candidates) out.candidates.push_back(std::move(cand));
  }

  // Accept candidates clearing the coverage floor; smallest log-volume wins,
  // ties within 1e-9 broken by (restart, ball_id, round).
  const double floor_count =
      (1.0 - cfg.coverage_const_c2 * cfg.alpha / cfg.gamma) * double(n) - 1e-9;
  double best_vol = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& cand : out.candidates) {
    if (static_cast<double>(cand.coverage_count) < floor_count) continue;
    any = true;
    best_vol = std::min(best_vol, cand.log_volume);
  }
  if (!any)
    throw NoFeasibleCandidate(
        "approximate_coverage_ellipsoid: no candidate met the coverage floor",
        std::move(out.candidates));
  std::size_t best = out.candidates.size();
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    const auto& cand = out.candidates[i];
    if (static_cast<double>(cand.coverage_count) < floor_count) continue;
    if (!(cand.log_volume <= best_vol + 1e-9)) continue;
    if (best == out.candidates.size()) {
      best = i;
      continue;
    }
    const auto& cur = out.candidates[best];
    const auto key = [](const CandidateRecord& r) {
      return std::make_tuple(r.restart, r.ball_id.first, r.ball_id.second,
                             r.round);
    };
    if (key(cand) < key(cur)) best = i;
  }
  out.best_index = best;
  return out;
}

}  // namespace

std::vector<BallSpec> candidate_bounding_balls(const PointSet& a,
                                               double alpha) {
  if (a.size() == 0) throw Error("candidate_bounding_balls: empty point set");
  BallScan scan = scan_balls(a, alpha);
  std::vector<BallSpec> out;
  out.reserve(scan.deduped.size());
  for (const auto& ball : scan.deduped) out.push_back(ball.spec);
  return out;
}

std::vector<std::int64_t> removal_draw(const Eigen::VectorXd& weights,
                                       const PointSet& pts, Rng& rng) {
  if (weights.size() != pts.size())
    throw DimensionMismatch("removal_draw: weights/points mismatch");
  std::vector<std::int64_t> removed;
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    const double w = std::clamp(weights(i), 0.0, 1.0);
    if (rng.uniform() < w) removed.push_back(pts.id(i));
  }
  return removed;
}

RemovalRound removal_round(const PointSet& origin_points,
                           const SolverConfig& cfg, Rng& rng) {
  RemovalRound out;
  try {
    out.dual = solve_dual_origin(origin_points, cfg);
  } catch (const RankDeficient& rd) {
    out.short_circuit = true;
    out.flat = origin_flat_ellipsoid(origin_points, rd, cfg);
    return out;
  }
  out.removed_ids = removal_draw(out.dual.weights, origin_points, rng);
  return out;
}

CoverageOutput approximate_coverage_ellipsoid(const PointSet& a,
                                              const AlgoConfig& cfg) {
  return run_pipeline(a, cfg, /*lifted=*/true);
}

CoverageOutput approximate_coverage_ellipsoid_origin(const PointSet& a,
                                                     const AlgoConfig& cfg) {
  return run_pipeline(a, cfg, /*lifted=*/false);
}

}  // namespace rce
