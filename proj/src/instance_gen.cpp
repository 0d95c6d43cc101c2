#include "rce/instance_gen.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "rce/rng.hpp"

namespace rce {

namespace {

Eigen::VectorXd random_unit(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

Eigen::MatrixXd random_rotation(std::uint64_t seed, int d) {
  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

PlantedEllipsoid gen_planted_ellipsoid(const PlantedEllipsoidSpec& spec) {
  const int d = spec.dim;
  if (d < 1) throw Error("gen_planted_ellipsoid: dim must be >= 1");
  if (spec.beta < 1.0) throw Error("gen_planted_ellipsoid: beta must be >= 1");
  if (spec.alpha < 0.0 || spec.alpha >= 1.0)
    throw Error("gen_planted_ellipsoid: alpha must be in [0, 1)");
  if (spec.n < 1) throw Error("gen_planted_ellipsoid: n must be >= 1");

  Eigen::VectorXd center = spec.center.size() == d
                               ? spec.center
                               : Eigen::VectorXd::Zero(d);

  // Semi-axes geometrically spaced from 1 to beta.
  Eigen::VectorXd axes(d);
  for (int i = 0; i < d; ++i)
    axes(i) = d > 1 ? std::pow(spec.beta, static_cast<double>(i) / (d - 1))
                    : 1.0;
  const Eigen::MatrixXd rot = random_rotation(spec.rotation_seed, d);
  Eigen::MatrixXd shape =
      rot * axes.array().square().matrix().asDiagonal() * rot.transpose();
  shape = ((shape + shape.transpose()) / 2.0).eval();
  Ellipsoid truth(center, shape);

  const std::int64_t n_out =
      static_cast<std::int64_t>(std::floor(spec.alpha * double(spec.n)));
  const std::int64_t n_in = spec.n - n_out;
  const double shell = spec.outlier_radius_factor * axes(d - 1);

  Rng rng(spec.sample_seed);
  RowMatrixXd pts(spec.n, d);
  PlantedEllipsoid out{PointSet(d), truth, {}, {}};
  for (std::int64_t i = 0; i < n_in; ++i) {
    // Uniform in the unit ball, mapped through the planted shape.
    const Eigen::VectorXd dir = random_unit(rng, d);
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    pts.row(i) =
        (center + rot * (axes.array() * (radius * dir).array()).matrix())
            .transpose();
    out.inlier_ids.push_back(i);
  }
  for (std::int64_t i = n_in; i < spec.n; ++i) {
    pts.row(i) = (center + shell * random_unit(rng, d)).transpose();
    out.outlier_ids.push_back(i);
  }
  out.points = PointSet(std::move(pts));
  return out;
}

PlantedSubspace gen_planted_subspace(int dim, int planted_dim, std::int64_t n,
                                     double alpha, std::uint64_t seed) {
  if (planted_dim < 1 || planted_dim > dim)
    throw Error("gen_planted_subspace: need 1 <= planted_dim <= dim");
  if (alpha < 0.0 || alpha >= 1.0)
    throw Error("gen_planted_subspace: alpha must be in [0, 1)");
  Rng rng(seed);
  Eigen::MatrixXd g(dim, planted_dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < planted_dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q =
      Eigen::MatrixXd(qr.householderQ()).leftCols(planted_dim);

  const std::int64_t n_out =
      static_cast<std::int64_t>(std::floor(alpha * double(n)));
  const std::int64_t n_in = n - n_out;
  RowMatrixXd pts(n, dim);
  PlantedSubspace out{PointSet(dim), q.transpose(), {}, {}};
  for (std::int64_t i = 0; i < n_in; ++i) {
    const Eigen::VectorXd z = random_unit(rng, planted_dim);
    pts.row(i) = (q * z).transpose();
    out.inlier_ids.push_back(i);
  }
  for (std::int64_t i = n_in; i < n; ++i) {
    pts.row(i) = random_unit(rng, dim).transpose();
    out.outlier_ids.push_back(i);
  }
  out.points = PointSet(std::move(pts));
  return out;
}

Graph read_graph(std::istream& in) {
  Graph g;
  std::string line;
  if (!std::getline(in, line))
    throw Error("read_graph: empty input");
  {
    std::istringstream head(line);
    if (!(head >> g.vertices >> g.degree) || g.vertices <= 0 || g.degree < 0)
      throw Error("read_graph: malformed header, expected \"d delta\"");
  }
  std::int64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    std::istringstream ls(line);
    int i = 0, j = 0;
    if (!(ls >> i)) continue;  // blank line
    if (!(ls >> j))
      throw Error("read_graph: malformed edge at line " + std::to_string(row));
    if (i < 0 || j < 0 || i >= g.vertices || j >= g.vertices || i == j)
      throw Error("read_graph: bad edge at line " + std::to_string(row));
    g.edges.emplace_back(i, j);
  }
  return g;
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_graph: cannot open " + path);
  return read_graph(in);
}

Graph cycle_graph(int n) {
  Graph g{n, 2, {}};
  for (int i = 0; i < n; ++i) g.edges.emplace_back(i, (i + 1) % n);
  return g;
}

Graph complete_graph(int n) {
  Graph g{n, n - 1, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

Graph hypercube_graph(int k) {
  const int n = 1 << k;
  Graph g{n, k, {}};
  for (int v = 0; v < n; ++v)
    for (int b = 0; b < k; ++b) {
      const int u = v ^ (1 << b);
      if (v < u) g.edges.emplace_back(v, u);
    }
  return g;
}

namespace {

void check_regular(const Graph& g) {
  std::vector<int> deg(static_cast<std::size_t>(g.vertices), 0);
  for (const auto& [i, j] : g.edges) {
    ++deg[static_cast<std::size_t>(i)];
    ++deg[static_cast<std::size_t>(j)];
  }
  for (int v = 0; v < g.vertices; ++v)
    if (deg[static_cast<std::size_t>(v)] != g.degree)
      throw GraphNotRegular("gen_sse_instance: vertex " + std::to_string(v) +
                            " has degree " +
                            std::to_string(deg[static_cast<std::size_t>(v)]));
}

}  // namespace

SseInstance gen_sse_instance(const SseInstanceSpec& spec) {
  const Graph& g = spec.graph;
  check_regular(g);
  const int d = g.vertices;
  const auto m = static_cast<std::int64_t>(g.edges.size());
  const std::int64_t pad =
      spec.eta_pad > 0.0
          ? static_cast<std::int64_t>(
                std::llround(spec.eta_pad * double(m) / spec.delta))
          : 0;

  SseInstance out{PointSet(d), {}, 0.0, false};
  RowMatrixXd pts(m + pad, d);
  pts.setZero();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::int64_t e = 0; e < m; ++e) {
    pts(e, g.edges[static_cast<std::size_t>(e)].first) = inv_sqrt2;
    pts(e, g.edges[static_cast<std::size_t>(e)].second) = inv_sqrt2;
    out.edge_of_point.push_back(static_cast<int>(e));
  }
  for (std::int64_t t = 0; t < pad; ++t) out.edge_of_point.push_back(-1);

  if (spec.cap_c > 0.0) {
    out.noise_scale = std::pow(static_cast<double>(d), -spec.cap_c);
    const double var = out.noise_scale * out.noise_scale / d;
    out.underflow_warning = var < 1e-300;
    const double sigma = std::sqrt(var);
    Rng rng(spec.seed);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (int j = 0; j < d; ++j) pts(i, j) += sigma * rng.normal();
      const double norm = pts.row(i).norm();
      if (norm < 1e-300)
        throw ZeroVector("gen_sse_instance: perturbed point has zero norm");
      pts.row(i) /= norm;
    }
  }
  out.points = PointSet(std::move(pts));
  return out;
}

double eta_for_alpha(double alpha, double delta, double eps) {
  if (alpha <= 0.0) throw Error("eta_for_alpha: alpha must be > 0");
  return (delta - (1.0 - eps) * delta * delta) / alpha - delta;
}

SpanBounds span_bounds_check(const std::vector<int>& edge_subset,
                             const Graph& graph) {
  SpanBounds out;
  std::unordered_set<int> incident;
  const int d = graph.vertices;
  RowMatrixXd vecs(static_cast<Eigen::Index>(edge_subset.size()), d);
  vecs.setZero();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::Index r = 0;
  for (int e : edge_subset) {
    if (e < 0 || e >= static_cast<int>(graph.edges.size()))
      throw Error("span_bounds_check: edge index out of range");
    const auto& [i, j] = graph.edges[static_cast<std::size_t>(e)];
    incident.insert(i);
    incident.insert(j);
    vecs(r, i) = inv_sqrt2;
    vecs(r, j) = inv_sqrt2;
    ++r;
  }
  out.neighborhood = static_cast<int>(incident.size());
  out.lower = out.neighborhood / 2.0;
  out.upper = out.neighborhood;
  if (!edge_subset.empty()) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(vecs);
    const double smax = svd.singularValues()(0);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-9 * smax) ++out.dim_span;
  }
  out.ok = out.dim_span + 1e-12 >= out.lower &&
           static_cast<double>(out.dim_span) <= out.upper + 1e-12;
  return out;
}

}  // namespace rce
