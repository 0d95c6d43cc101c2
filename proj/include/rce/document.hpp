#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rce/ellipsoid.hpp"
#include "rce/point_set.hpp"

namespace rce {

/// Serialized ellipsoid with run metadata. The text form is JSON with sorted
/// keys and %.17g floats so identical runs produce byte-identical files;
/// non-finite values (log-volume of a flat, its condition number) serialize
/// as null.
struct EllipsoidDocument {
  int dim = 0;
  std::vector<double> center;
  std::vector<double> shape;  // row-major d x d, lower triangle mirrored
  double log_volume = 0.0;
  double condition_number = 0.0;
  /// Flat normal directions (row-major rows), present only when degenerate.
  std::optional<std::vector<double>> degenerate_basis;
  struct Meta {
    double alpha = 0.0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    std::int64_t coverage_count = 0;
    std::int64_t n = 0;
  } meta;
};

EllipsoidDocument make_document(const Ellipsoid& e,
                                const EllipsoidDocument::Meta& meta);

Ellipsoid ellipsoid_from_document(const EllipsoidDocument& doc);

std::string document_to_json(const EllipsoidDocument& doc);
EllipsoidDocument document_from_json(const std::string& text);

void write_document(const std::string& path, const EllipsoidDocument& doc);
EllipsoidDocument read_document(const std::string& path);

/// Strict CSV points: one point per row, equal column counts, finite values
/// only. Throws Error naming the offending row.
PointSet read_points_csv(const std::string& path, bool skip_header = false);
void write_points_csv(const std::string& path, const RowMatrixXd& points);

/// Shortest-width %.17g formatting shared by every writer.
std::string format_double(double x);

}  // namespace rce
