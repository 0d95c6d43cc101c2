#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "rce/coverage.hpp"
#include "rce/document.hpp"
#include "rce/instance_gen.hpp"
#include "rce/oracle.hpp"
#include "rce/rng.hpp"
#include "test_util.hpp"

using namespace rce;

namespace {

#ifndef RCE_CLI_PATH
#define RCE_CLI_PATH "robust-ellipsoid"
#endif

std::string tmp_path(const std::string& name) {
  return std::string("/tmp/rce_test_") + name;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RCE_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("documents round-trip byte-stably") {
  Rng rng(3);
  const Eigen::MatrixXd m = testutil::random_psd(rng, 3, 0.2);
  Eigen::VectorXd c(3);
  c << 0.25, -1.5, 3.0;
  const Ellipsoid e(c, m);
  EllipsoidDocument::Meta meta;
  meta.alpha = 0.05;
  meta.gamma = 0.25;
  meta.seed = 42;
  meta.coverage_count = 19;
  meta.n = 20;
  const EllipsoidDocument doc = make_document(e, meta);
  const std::string text = document_to_json(doc);
  const EllipsoidDocument parsed = document_from_json(text);
  CHECK(document_to_json(parsed) == text);

  const Ellipsoid back = ellipsoid_from_document(parsed);
  CHECK((back.center() - e.center()).norm() == 0.0);
  CHECK((back.shape() - e.shape()).norm() == 0.0);
}

TEST_CASE("degenerate documents carry the flat directions") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = 4.0;
  const Ellipsoid flat(Eigen::VectorXd::Zero(2), m);
  EllipsoidDocument doc = make_document(flat, {});
  REQUIRE(doc.degenerate_basis.has_value());
  CHECK(doc.degenerate_basis->size() == 2);
  const std::string text = document_to_json(doc);
  CHECK(text.find("\"log_volume\": null") != std::string::npos);
  const EllipsoidDocument parsed = document_from_json(text);
  CHECK(parsed.log_volume == -std::numeric_limits<double>::infinity());
}

TEST_CASE("csv reader is strict") {
  const std::string path = tmp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "1.0,2.0\n3.0\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(read_points_csv(path)),
                       doctest::Contains("row 2"), Error);
  {
    std::ofstream out(path);
    out << "1.0,nan\n";
  }
  CHECK_THROWS_AS(static_cast<void>(read_points_csv(path)), Error);
  {
    std::ofstream out(path);
    out << "x,y\n1.0,2.0\n";
  }
  const PointSet a = read_points_csv(path, /*skip_header=*/true);
  CHECK(a.size() == 1);
  std::remove(path.c_str());
}

TEST_CASE("csv round trip") {
  Rng rng(9);
  const RowMatrixXd pts = testutil::gaussian_points(rng, 12, 3);
  const std::string path = tmp_path("roundtrip.csv");
  write_points_csv(path, pts);
  const PointSet back = read_points_csv(path);
  CHECK((back.points() - pts).norm() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("cli exit codes") {
  const std::string points = tmp_path("cli_points.csv");
  {
    std::ofstream out(points);
    out << "0,0\n2,0\n0,2\n2,2\n";
  }
  const std::string doc = tmp_path("cli_doc.json");

  // Missing required --alpha.
  CHECK(run_cli("fit --input " + points + " --gamma 0.5 --seed 1 --out " +
                doc) == 1);
  // Malformed input file.
  const std::string bad = tmp_path("cli_bad.csv");
  {
    std::ofstream out(bad);
    out << "1,2\n3\n";
  }
  CHECK(run_cli("fit --input " + bad + " --alpha 0.1 --gamma 0.5 --seed 1 "
                "--out " + doc) == 1);
  // Happy path.
  CHECK(run_cli("fit --input " + points +
                " --alpha 0.01 --gamma 0.5 --seed 1 --out " + doc) == 0);
  CHECK(run_cli("eval --input " + points + " --doc " + doc) == 0);
  // Oracle over budget.
  CHECK(run_cli("oracle --input " + points + " --k 2 --max-subsets 1 --out " +
                doc) == 1);
  std::remove(points.c_str());
  std::remove(bad.c_str());
  std::remove(doc.c_str());
}

TEST_CASE("fit then eval reproduces the embedded coverage count") {
  PlantedEllipsoidSpec spec;
  spec.dim = 2;
  spec.n = 40;
  spec.beta = 4.0;
  spec.alpha = 0.1;
  spec.rotation_seed = 2;
  spec.sample_seed = 3;
  const PlantedEllipsoid inst = gen_planted_ellipsoid(spec);
  const std::string points = tmp_path("fit_points.csv");
  write_points_csv(points, inst.points.points());
  const std::string doc = tmp_path("fit_doc.json");

  CHECK(run_cli("fit --input " + points +
                " --alpha 0.1 --gamma 0.5 --seed 7 --ball-cap 12 "
                "--restarts 2 --out " + doc) == 0);
  const EllipsoidDocument parsed = document_from_json(slurp(doc));
  const PointSet back = read_points_csv(points);
  const CoverageResult cov = coverage(ellipsoid_from_document(parsed), back);
  CHECK(cov.count == parsed.meta.coverage_count);
  std::remove(points.c_str());
  std::remove(doc.c_str());
}

#ifdef RCE_FIXTURE_DIR
TEST_CASE("shipped fixture reproduces its golden document") {
  const std::string dir = RCE_FIXTURE_DIR;
  const std::string points = dir + "/planted_d2_n12.csv";
  const std::string golden = dir + "/planted_d2_n12_fit.json";
  const std::string out = tmp_path("golden_fit.json");
  CHECK(run_cli("fit --input " + points +
                " --alpha 0.1 --gamma 0.8 --seed 3 --out " + out) == 0);
  CHECK(slurp(out) == slurp(golden));
  std::remove(out.c_str());

  // The same run's candidates stay inside the brute-force oracle window at
  // equal coverage.
  const PointSet a = read_points_csv(points);
  AlgoConfig cfg;
  cfg.alpha = 0.1;
  cfg.gamma = 0.8;
  cfg.seed = 3;
  const CoverageOutput pipe = approximate_coverage_ellipsoid(a, cfg);
  const OracleResult oracle = brute_force_min_k_ellipsoid(a, 10);
  double at_k = std::numeric_limits<double>::infinity();
  for (const auto& cand : pipe.candidates)
    if (cand.coverage_count >= 10) at_k = std::min(at_k, cand.log_volume);
  CHECK(at_k >= oracle.log_volume - 1e-6);
  const double beta_o = condition_number(oracle.ellipsoid);
  CHECK(at_k <=
        oracle.log_volume + 2.0 * cfg.gamma * 3.0 * std::log(4.0 * beta_o));

  // The golden document's floor line: coverage >= (1 - c2 alpha / gamma) n.
  const EllipsoidDocument doc = document_from_json(slurp(golden));
  CHECK(static_cast<double>(doc.meta.coverage_count) >=
        (1.0 - 4.0 * cfg.alpha / cfg.gamma) * static_cast<double>(doc.meta.n));
}
#endif

TEST_CASE("documents are identical across runs and thread caps") {
  PlantedEllipsoidSpec spec;
  spec.dim = 2;
  spec.n = 60;
  spec.beta = 6.0;
  spec.alpha = 0.1;
  spec.rotation_seed = 11;
  spec.sample_seed = 12;
  const PlantedEllipsoid inst = gen_planted_ellipsoid(spec);
  const std::string points = tmp_path("det_points.csv");
  write_points_csv(points, inst.points.points());

  const std::string flags = " --alpha 0.1 --gamma 0.5 --seed 5 --restarts 3 "
                            "--ball-cap 16 ";
  const std::string d1 = tmp_path("det1.json");
  const std::string d2 = tmp_path("det2.json");
  CHECK(run_cli("fit --input " + points + flags + "--threads 1 --out " + d1) ==
        0);
  CHECK(run_cli("fit --input " + points + flags + "--threads 8 --out " + d2) ==
        0);
  CHECK(slurp(d1) == slurp(d2));
  std::remove(points.c_str());
  std::remove(d1.c_str());
  std::remove(d2.c_str());
}
