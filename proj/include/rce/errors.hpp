#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>

namespace rce {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An ellipsoid has a non-positive shape eigenvalue where a positive one is required.
class DegenerateEllipsoid : public Error {
 public:
  explicit DegenerateEllipsoid(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

/// Points do not span the ambient space; carries the numerical rank and an
/// orthonormal basis (columns) of the span they do cover.
class RankDeficient : public Error {
 public:
  RankDeficient(int rank, Eigen::MatrixXd basis, const std::string& what)
      : Error(what), rank_(rank), basis_(std::move(basis)) {}
  int rank() const { return rank_; }
  const Eigen::MatrixXd& span_basis() const { return basis_; }

 private:
  int rank_;
  Eigen::MatrixXd basis_;
};

/// The weighted vectors handed to the log-concavity gap check are not an
/// (approximate) resolution of the identity.
class NotATightFrame : public Error {
 public:
  explicit NotATightFrame(const std::string& what) : Error(what) {}
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error(what) {}
};

class GraphNotRegular : public Error {
 public:
  explicit GraphNotRegular(const std::string& what) : Error(what) {}
};

class ZeroVector : public Error {
 public:
  explicit ZeroVector(const std::string& what) : Error(what) {}
};

}  // namespace rce
