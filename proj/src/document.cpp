#include "rce/document.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace rce {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void append_number(std::string& out, double x) {
  if (std::isfinite(x)) {
    out += format_double(x);
  } else {
    out += "null";
  }
}

void append_array(std::string& out, const std::vector<double>& xs) {
  out += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    append_number(out, xs[i]);
  }
  out += ']';
}

double number_or(const nlohmann::json& j, double fallback) {
  if (j.is_null()) return fallback;
  return j.get<double>();
}

}  // namespace

EllipsoidDocument make_document(const Ellipsoid& e,
                                const EllipsoidDocument::Meta& meta) {
  EllipsoidDocument doc;
  doc.dim = e.dim();
  doc.center.assign(e.center().data(), e.center().data() + e.dim());
  doc.shape.resize(static_cast<std::size_t>(e.dim()) * e.dim());
  for (int i = 0; i < e.dim(); ++i)
    for (int j = 0; j < e.dim(); ++j) {
      // Exact mirror of the lower triangle.
      const double v = i >= j ? e.shape()(i, j) : e.shape()(j, i);
      doc.shape[static_cast<std::size_t>(i) * e.dim() + j] = v;
    }
  if (e.degenerate()) {
    doc.log_volume = -std::numeric_limits<double>::infinity();
    doc.condition_number = std::numeric_limits<double>::infinity();
    std::vector<double> flats;
    const double lmax = e.eigenvalues()(e.dim() - 1);
    for (int i = 0; i < e.dim(); ++i) {
      if (e.eigenvalues()(i) <= 1e-13 * std::max(lmax, 0.0)) {
        for (int j = 0; j < e.dim(); ++j)
          flats.push_back(e.eigenvectors()(j, i));
      }
    }
    doc.degenerate_basis = std::move(flats);
  } else {
    doc.log_volume = log_volume(e);
    doc.condition_number = condition_number(e);
  }
  doc.meta = meta;
  return doc;
}

Ellipsoid ellipsoid_from_document(const EllipsoidDocument& doc) {
  const int d = doc.dim;
  Eigen::VectorXd center(d);
  for (int i = 0; i < d; ++i) center(i) = doc.center[static_cast<std::size_t>(i)];
  Eigen::MatrixXd shape(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      shape(i, j) = doc.shape[static_cast<std::size_t>(i) * d + j];
  return Ellipsoid(std::move(center), std::move(shape));
}

std::string document_to_json(const EllipsoidDocument& doc) {
  std::string out;
  out.reserve(256 + doc.shape.size() * 24);
  out += "{\n";
  out += "  \"center\": ";
  append_array(out, doc.center);
  out += ",\n  \"condition_number\": ";
  append_number(out, doc.condition_number);
  if (doc.degenerate_basis) {
    out += ",\n  \"degenerate_basis\": ";
    append_array(out, *doc.degenerate_basis);
  }
  out += ",\n  \"dim\": " + std::to_string(doc.dim);
  out += ",\n  \"log_volume\": ";
  append_number(out, doc.log_volume);
  out += ",\n  \"meta\": {";
  out += "\"alpha\": ";
  append_number(out, doc.meta.alpha);
  out += ", \"coverage_count\": " + std::to_string(doc.meta.coverage_count);
  out += ", \"gamma\": ";
  append_number(out, doc.meta.gamma);
  out += ", \"n\": " + std::to_string(doc.meta.n);
  out += ", \"seed\": " + std::to_string(doc.meta.seed);
  out += "}";
  out += ",\n  \"shape\": ";
  append_array(out, doc.shape);
  out += "\n}\n";
  return out;
}

EllipsoidDocument document_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("document parse error: ") + e.what());
  }
  EllipsoidDocument doc;
  try {
    doc.dim = j.at("dim").get<int>();
    doc.center = j.at("center").get<std::vector<double>>();
    doc.shape = j.at("shape").get<std::vector<double>>();
    doc.log_volume = number_or(j.at("log_volume"),
                               -std::numeric_limits<double>::infinity());
    doc.condition_number = number_or(j.at("condition_number"),
                                     std::numeric_limits<double>::infinity());
    if (j.contains("degenerate_basis"))
      doc.degenerate_basis = j.at("degenerate_basis").get<std::vector<double>>();
    const auto& meta = j.at("meta");
    doc.meta.alpha = number_or(meta.at("alpha"), 0.0);
    doc.meta.gamma = number_or(meta.at("gamma"), 0.0);
    doc.meta.seed = meta.at("seed").get<std::uint64_t>();
    doc.meta.coverage_count = meta.at("coverage_count").get<std::int64_t>();
    doc.meta.n = meta.at("n").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("document field error: ") + e.what());
  }
  if (doc.dim <= 0 ||
      doc.center.size() != static_cast<std::size_t>(doc.dim) ||
      doc.shape.size() != static_cast<std::size_t>(doc.dim) * doc.dim)
    throw Error("document field error: inconsistent dimensions");
  return doc;
}

void write_document(const std::string& path, const EllipsoidDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_document: cannot open " + path);
  out << document_to_json(doc);
  if (!out) throw Error("write_document: write failed for " + path);
}

EllipsoidDocument read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_document: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return document_from_json(ss.str());
}

PointSet read_points_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw Error("read_points_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t lineno = 0;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    // Trim a trailing CR and skip blank lines.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string field = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      const std::size_t b = field.find_first_not_of(" \t");
      const std::size_t e = field.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw Error("read_points_csv: empty field at row " +
                    std::to_string(lineno));
      field = field.substr(b, e - b + 1);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end != field.c_str() + field.size() || !std::isfinite(v))
        throw Error("read_points_csv: bad value \"" + field + "\" at row " +
                    std::to_string(lineno));
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw Error("read_points_csv: row " + std::to_string(lineno) + " has " +
                  std::to_string(row.size()) + " columns, expected " +
                  std::to_string(width));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("read_points_csv: no data rows in " + path);
  RowMatrixXd pts(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return PointSet(std::move(pts));
}

void write_points_csv(const std::string& path, const RowMatrixXd& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_points_csv: cannot open " + path);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j) out << ',';
      out << format_double(points(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("write_points_csv: write failed for " + path);
}

}  // namespace rce
