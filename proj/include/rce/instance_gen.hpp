#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rce/ellipsoid.hpp"
#include "rce/point_set.hpp"

namespace rce {

struct PlantedEllipsoidSpec {
  int dim = 2;
  std::int64_t n = 100;
  double beta = 1.0;   // condition number of the planted ellipsoid
  double alpha = 0.0;  // outlier fraction; floor(alpha n) outliers exactly
  /// Outliers sit on a shell at this multiple of the longest semi-axis.
  double outlier_radius_factor = 2.0;
  Eigen::VectorXd center;  // empty means the origin
  std::uint64_t rotation_seed = 0;
  std::uint64_t sample_seed = 0;
};

struct PlantedEllipsoid {
  PointSet points;  // inliers first, ids 0..n-1
  Ellipsoid truth;
  std::vector<std::int64_t> inlier_ids;
  std::vector<std::int64_t> outlier_ids;
};

/// Inliers uniform inside the planted ellipsoid (semi-axes geometrically
/// spaced from 1 to beta, randomly rotated); outliers on an outer shell, so
/// the inlier/outlier partition is exact under membership recount.
PlantedEllipsoid gen_planted_ellipsoid(const PlantedEllipsoidSpec& spec);

struct PlantedSubspace {
  PointSet points;          // unit vectors, inliers first, ids 0..n-1
  Eigen::MatrixXd basis;    // orthonormal rows spanning the planted subspace
  std::vector<std::int64_t> inlier_ids;
  std::vector<std::int64_t> outlier_ids;
};

PlantedSubspace gen_planted_subspace(int dim, int planted_dim, std::int64_t n,
                                     double alpha, std::uint64_t seed);

struct Graph {
  int vertices = 0;
  int degree = 0;
  std::vector<std::pair<int, int>> edges;
};

/// Plain-text format: first line "d delta", then one "i j" edge per line,
/// 0-indexed.
Graph read_graph(std::istream& in);
Graph load_graph(const std::string& path);

Graph cycle_graph(int n);
Graph complete_graph(int n);
Graph hypercube_graph(int k);  // 2^k vertices, k-regular

struct SseInstanceSpec {
  Graph graph;
  double delta = 0.1;   // subspace-size scale of the reduction
  double eta_pad = 0.0; // origin padding: T = round(eta_pad * m / delta)
  /// Perturbation exponent: noise scale d^(-cap_c). <= 0 disables the
  /// perturbation entirely (points are left unnormalized; origin padding
  /// stays exactly at the origin).
  double cap_c = 10.0;
  std::uint64_t seed = 0;
};

struct SseInstance {
  PointSet points;               // one per edge, then T padding points
  std::vector<int> edge_of_point;  // edge index, -1 for padding
  double noise_scale = 0.0;        // d^(-cap_c), 0 when disabled
  bool underflow_warning = false;  // noise variance below 1e-300
};

SseInstance gen_sse_instance(const SseInstanceSpec& spec);

/// Padding ratio eta solving alpha = (delta - (1-eps) delta^2) / (delta + eta).
double eta_for_alpha(double alpha, double delta, double eps);

struct SpanBounds {
  int dim_span = 0;
  int neighborhood = 0;  // |N_B(F)|, vertices incident to the edge subset
  double lower = 0.0;    // |N_B(F)| / 2
  double upper = 0.0;    // |N_B(F)|
  bool ok = false;
};

/// Numerical rank of the unperturbed edge vectors for the given edge subset,
/// against the combinatorial sandwich |N|/2 <= dim <= |N|.
SpanBounds span_bounds_check(const std::vector<int>& edge_subset,
                             const Graph& graph);

}  // namespace rce
