#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "rce/coverage.hpp"
#include "rce/document.hpp"
#include "rce/instance_gen.hpp"
#include "rce/oracle.hpp"
#include "rce/subspace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;

int env_threads() {
  const char* env = std::getenv("ROBUST_ELLIPSOID_THREADS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v < 0 ? 1 : v;  // 0 = auto
}

struct FitArgs {
  std::string input;
  std::string out;
  double alpha = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  int restarts = 0;
  double c = 56.0;
  double c2 = 4.0;
  double eta = 1e-7;
  std::uint64_t ball_cap = 0;
  int threads = -1;  // -1 = from env
  bool header = false;
};

int run_fit(const FitArgs& args) {
  rce::PointSet points = rce::read_points_csv(args.input, args.header);
  rce::AlgoConfig cfg;
  cfg.alpha = args.alpha;
  cfg.gamma = args.gamma;
  cfg.seed = args.seed;
  cfg.restarts = args.restarts;
  cfg.iter_const_c = args.c;
  cfg.coverage_const_c2 = args.c2;
  cfg.solver.eta = args.eta;
  cfg.ball_cap = static_cast<std::size_t>(args.ball_cap);
  cfg.threads = args.threads >= 0 ? args.threads : env_threads();

  try {
    const rce::CoverageOutput out = rce::approximate_coverage_ellipsoid(points, cfg);
    const rce::CandidateRecord& best = out.best();

    rce::EllipsoidDocument::Meta meta;
    meta.alpha = cfg.alpha;
    meta.gamma = cfg.gamma;
    meta.seed = cfg.seed;
    meta.coverage_count = best.coverage_count;
    meta.n = points.size();
    rce::write_document(args.out, rce::make_document(best.ellipsoid, meta));

    std::cout << "fit: n=" << points.size() << " d=" << points.dim()
              << " alpha=" << cfg.alpha << " gamma=" << cfg.gamma
              << " seed=" << cfg.seed << "\n";
    std::cout << "balls: retained=" << out.balls_retained
              << " deduped=" << out.balls_after_dedup << " run=" << out.balls_run
              << " restarts=" << out.restarts
              << " rounds_limit=" << out.rounds_per_branch_limit << "\n";
    std::cout << "candidates: " << out.candidates.size() << "\n";
    std::cout << "best: log_volume=" << rce::format_double(best.log_volume)
              << " coverage=" << best.coverage_count << "/" << points.size()
              << " (round " << best.round << ", restart " << best.restart
              << ", ball " << best.ball_id.first << "," << best.ball_id.second
              << ")\n";
    std::cout << "document: " << args.out << "\n";
    return kExitOk;
  } catch (const rce::NoFeasibleCandidate& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    // Highest-coverage candidates for diagnosis.
    auto cands = e.candidates();
    std::sort(cands.begin(), cands.end(),
              [](const rce::CandidateRecord& x, const rce::CandidateRecord& y) {
                return x.coverage_count > y.coverage_count;
              });
    const std::size_t show = std::min<std::size_t>(5, cands.size());
    for (std::size_t i = 0; i < show; ++i)
      std::cerr << "  candidate coverage=" << cands[i].coverage_count
                << " log_volume=" << rce::format_double(cands[i].log_volume)
                << " ball=" << cands[i].ball_id.first << ","
                << cands[i].ball_id.second << " round=" << cands[i].round
                << "\n";
    return kExitInfeasible;
  }
}

struct SubspaceArgs {
  std::string input;
  std::string out_prefix;
  double gamma = 0.0;
  double eps = 0.0;
  double eps_star = -1.0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool header = false;
};

int run_subspace(const SubspaceArgs& args) {
  rce::PointSet points = rce::read_points_csv(args.input, args.header);
  rce::SubspaceConfig cfg;
  cfg.gamma = args.gamma;
  cfg.eps = args.eps;
  if (args.eps_star >= 0.0) cfg.eps_star_override = args.eps_star;
  cfg.alpha_hint = args.alpha;
  cfg.seed = args.seed;
  cfg.ellipsoid_cfg.threads = env_threads();

  try {
    const rce::SubspaceResult res = rce::recover_subspace(points, cfg);
    if (res.inputs_renormalized)
      std::cerr << "warning: input points were not unit length; normalized\n";
    if (res.sample_size_warning)
      std::cerr << "warning: n below d*log(d/eps_star); recovery may be noisy\n";

    rce::write_points_csv(args.out_prefix + "_basis.csv", res.basis);
    rce::RowMatrixXd dist(points.size(), 1);
    dist.col(0) = res.distances;
    rce::write_points_csv(args.out_prefix + "_distances.csv", dist);

    std::cout << "subspace: n=" << points.size() << " d=" << points.dim()
              << " gamma=" << cfg.gamma << " eps=" << cfg.eps
              << " eps_star=" << rce::format_double(res.eps_star)
              << " seed=" << cfg.seed << "\n";
    std::cout << "dim=" << res.dim << " close_count=" << res.close_count << "/"
              << points.size() << " (eps=" << cfg.eps << ")\n";
    std::cout << "basis: " << args.out_prefix << "_basis.csv\n";
    std::cout << "distances: " << args.out_prefix << "_distances.csv\n";
    return kExitOk;
  } catch (const rce::NoFeasibleCandidate& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  }
}

int run_eval(const std::string& input, const std::string& doc_path,
             double slack, bool header) {
  const rce::PointSet points = rce::read_points_csv(input, header);
  const rce::EllipsoidDocument doc = rce::read_document(doc_path);
  const rce::Ellipsoid e = rce::ellipsoid_from_document(doc);
  const rce::CoverageResult cov = rce::coverage(e, points, slack);
  const double logvol = e.degenerate()
                            ? -std::numeric_limits<double>::infinity()
                            : rce::log_volume(e);
  const double cond = e.degenerate()
                          ? std::numeric_limits<double>::infinity()
                          : rce::condition_number(e);
  std::cout << "eval: coverage " << cov.count << "/" << points.size()
            << " fraction=" << rce::format_double(cov.fraction)
            << " log_volume=" << rce::format_double(logvol)
            << " condition_number=" << rce::format_double(cond) << "\n";
  std::cout << "{\"coverage_count\": " << cov.count
            << ", \"fraction\": " << rce::format_double(cov.fraction)
            << ", \"log_volume\": "
            << (std::isfinite(logvol) ? rce::format_double(logvol) : "null")
            << ", \"condition_number\": "
            << (std::isfinite(cond) ? rce::format_double(cond) : "null")
            << "}\n";
  return kExitOk;
}

int run_oracle(const std::string& input, std::int64_t k,
               std::int64_t max_subsets, double tol, const std::string& out,
               bool header) {
  const rce::PointSet points = rce::read_points_csv(input, header);
  rce::OracleBudget budget;
  budget.max_subsets = max_subsets;
  budget.tol = tol;
  const rce::OracleResult res =
      rce::brute_force_min_k_ellipsoid(points, k, budget);
  rce::EllipsoidDocument::Meta meta;
  meta.alpha = 1.0 - static_cast<double>(k) / points.size();
  meta.gamma = 0.0;
  meta.seed = 0;
  meta.coverage_count = static_cast<std::int64_t>(res.covered_ids.size());
  meta.n = points.size();
  rce::write_document(out, rce::make_document(res.ellipsoid, meta));
  std::cout << "oracle: k=" << k << " log_volume="
            << rce::format_double(res.log_volume)
            << " covered=" << res.covered_ids.size() << "/" << points.size()
            << "\n";
  std::cout << "document: " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"approximate minimum-volume coverage ellipsoids and robust "
               "subspace recovery"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "fit a coverage ellipsoid to CSV points");
  cmd_fit->add_option("--input", fit.input, "points CSV")->required();
  cmd_fit->add_option("--alpha", fit.alpha, "target miscoverage in (0,1)")->required();
  cmd_fit->add_option("--gamma", fit.gamma, "progress parameter in (0,1)")->required();
  cmd_fit->add_option("--seed", fit.seed, "rng seed")->required();
  cmd_fit->add_option("--out", fit.out, "output document path")->required();
  cmd_fit->add_option("--restarts", fit.restarts, "restarts (0 = ceil(log2 n))");
  cmd_fit->add_option("--c", fit.c, "round-count constant");
  cmd_fit->add_option("--c2", fit.c2, "coverage-floor constant");
  cmd_fit->add_option("--eta", fit.eta, "solver tolerance");
  cmd_fit->add_option("--ball-cap", fit.ball_cap,
                      "max bounding balls to branch on (0 = all)");
  cmd_fit->add_option("--threads", fit.threads,
                      "worker threads (0 = auto; default from "
                      "ROBUST_ELLIPSOID_THREADS)");
  cmd_fit->add_flag("--header", fit.header, "skip one CSV header line");

  SubspaceArgs sub;
  auto* cmd_sub = app.add_subcommand("subspace", "robust subspace recovery");
  cmd_sub->add_option("--input", sub.input, "points CSV (unit vectors)")->required();
  cmd_sub->add_option("--gamma", sub.gamma, "codimension parameter in (0,1)")->required();
  cmd_sub->add_option("--eps", sub.eps, "closeness parameter in (0,1)")->required();
  cmd_sub->add_option("--eps-star", sub.eps_star,
                      "perturbation scale override (default eps^(4/gamma))");
  cmd_sub->add_option("--alpha", sub.alpha, "expected outlier fraction");
  cmd_sub->add_option("--seed", sub.seed, "rng seed")->required();
  cmd_sub->add_option("--out-prefix", sub.out_prefix, "output path prefix")->required();
  cmd_sub->add_flag("--header", sub.header, "skip one CSV header line");

  auto* cmd_gen = app.add_subcommand("generate", "seeded instance generators");
  cmd_gen->require_subcommand(1);

  rce::PlantedEllipsoidSpec pe;
  std::string gen_out, gen_truth, gen_labels;
  auto* gen_planted = cmd_gen->add_subcommand("planted", "planted-ellipsoid instance");
  gen_planted->add_option("--dim", pe.dim)->required();
  gen_planted->add_option("--n", pe.n)->required();
  gen_planted->add_option("--beta", pe.beta)->required();
  gen_planted->add_option("--alpha", pe.alpha)->required();
  std::uint64_t gen_seed = 0;
  gen_planted->add_option("--seed", gen_seed)->required();
  gen_planted->add_option("--outlier-radius-factor", pe.outlier_radius_factor);
  gen_planted->add_option("--out", gen_out, "points CSV")->required();
  gen_planted->add_option("--truth", gen_truth, "planted ellipsoid document");
  gen_planted->add_option("--labels", gen_labels, "id,inlier/outlier CSV");

  int gs_dim = 0, gs_planted = 0;
  std::int64_t gs_n = 0;
  double gs_alpha = 0.0;
  std::uint64_t gs_seed = 0;
  std::string gs_out, gs_basis;
  auto* gen_sub = cmd_gen->add_subcommand("subspace", "planted-subspace instance");
  gen_sub->add_option("--dim", gs_dim)->required();
  gen_sub->add_option("--planted-dim", gs_planted)->required();
  gen_sub->add_option("--n", gs_n)->required();
  gen_sub->add_option("--alpha", gs_alpha)->required();
  gen_sub->add_option("--seed", gs_seed)->required();
  gen_sub->add_option("--out", gs_out, "points CSV")->required();
  gen_sub->add_option("--basis", gs_basis, "planted basis CSV");

  std::string sse_graph, sse_out;
  rce::SseInstanceSpec sse;
  auto* gen_sse = cmd_gen->add_subcommand("sse", "graph-based hard instance");
  gen_sse->add_option("--graph", sse_graph, "graph file (\"d delta\" then edges)")->required();
  gen_sse->add_option("--delta", sse.delta)->required();
  gen_sse->add_option("--eta-pad", sse.eta_pad)->required();
  gen_sse->add_option("--capc", sse.cap_c, "noise exponent (<=0 disables noise)");
  gen_sse->add_option("--seed", sse.seed);
  gen_sse->add_option("--out", sse_out, "points CSV")->required();

  std::string or_input, or_out;
  std::int64_t or_k = 0, or_max_subsets = 200000;
  double or_tol = 1e-12;
  bool or_header = false;
  auto* cmd_oracle = app.add_subcommand("oracle", "brute-force minimum k-enclosing ellipsoid");
  cmd_oracle->add_option("--input", or_input)->required();
  cmd_oracle->add_option("--k", or_k, "points the ellipsoid must cover")->required();
  cmd_oracle->add_option("--out", or_out)->required();
  cmd_oracle->add_option("--max-subsets", or_max_subsets);
  cmd_oracle->add_option("--tol", or_tol);
  cmd_oracle->add_flag("--header", or_header);

  std::string ev_input, ev_doc;
  double ev_slack = 1e-9;
  bool ev_header = false;
  auto* cmd_eval = app.add_subcommand("eval", "re-evaluate a document against points");
  cmd_eval->add_option("--input", ev_input)->required();
  cmd_eval->add_option("--doc", ev_doc)->required();
  cmd_eval->add_option("--slack", ev_slack);
  cmd_eval->add_flag("--header", ev_header);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (cmd_fit->parsed()) return run_fit(fit);
    if (cmd_sub->parsed()) return run_subspace(sub);
    if (cmd_oracle->parsed())
      return run_oracle(or_input, or_k, or_max_subsets, or_tol, or_out,
                        or_header);
    if (cmd_eval->parsed()) return run_eval(ev_input, ev_doc, ev_slack, ev_header);
    if (cmd_gen->parsed()) {
      if (gen_planted->parsed()) {
        pe.rotation_seed = gen_seed;
        pe.sample_seed = gen_seed + 1;
        const rce::PlantedEllipsoid inst = rce::gen_planted_ellipsoid(pe);
        rce::write_points_csv(gen_out, inst.points.points());
        if (!gen_truth.empty()) {
          rce::EllipsoidDocument::Meta meta;
          meta.alpha = pe.alpha;
          meta.seed = gen_seed;
          meta.coverage_count =
              static_cast<std::int64_t>(inst.inlier_ids.size());
          meta.n = pe.n;
          rce::write_document(gen_truth,
                              rce::make_document(inst.truth, meta));
        }
        if (!gen_labels.empty()) {
          std::ofstream out(gen_labels);
          if (!out) throw rce::Error("cannot open " + gen_labels);
          for (auto id : inst.inlier_ids) out << id << ",inlier\n";
          for (auto id : inst.outlier_ids) out << id << ",outlier\n";
        }
        std::cout << "generated " << pe.n << " points (" << inst.inlier_ids.size()
                  << " inliers, " << inst.outlier_ids.size() << " outliers)\n";
        return kExitOk;
      }
      if (gen_sub->parsed()) {
        const rce::PlantedSubspace inst =
            rce::gen_planted_subspace(gs_dim, gs_planted, gs_n, gs_alpha, gs_seed);
        rce::write_points_csv(gs_out, inst.points.points());
        if (!gs_basis.empty()) rce::write_points_csv(gs_basis, inst.basis);
        std::cout << "generated " << gs_n << " unit vectors ("
                  << inst.inlier_ids.size() << " on the planted subspace)\n";
        return kExitOk;
      }
      if (gen_sse->parsed()) {
        sse.graph = rce::load_graph(sse_graph);
        const rce::SseInstance inst = rce::gen_sse_instance(sse);
        if (inst.underflow_warning)
          std::cerr << "warning: noise variance underflows at this dimension\n";
        rce::write_points_csv(sse_out, inst.points.points());
        std::cout << "generated " << inst.points.size() << " points ("
                  << sse.graph.edges.size() << " edges)\n";
        return kExitOk;
      }
    }
  } catch (const rce::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const rce::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
