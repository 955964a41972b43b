#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace netcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Raised when an edge partition is not admissible. `element` and `edge` are
/// 0-based and set to -1 when not applicable.
class PartitionError : public Error {
 public:
  enum class Kind { EmptyElement, BadEdgeId, NotConnected, NotCovering, Assumption2Violated };

  PartitionError(Kind kind, int element, int edge, std::vector<int> uncovered, const std::string& what)
      : Error(what), kind_(kind), element_(element), edge_(edge), uncovered_(std::move(uncovered)) {}

  Kind kind() const { return kind_; }
  int element() const { return element_; }
  int edge() const { return edge_; }
  const std::vector<int>& uncovered() const { return uncovered_; }

 private:
  Kind kind_;
  int element_;
  int edge_;
  std::vector<int> uncovered_;
};

class LtiError : public Error {
 public:
  enum class Kind { NotFinite, DimensionMismatch, Unstabilizable, ResidualTooLarge, AlgebraicLoop, MissingFactor };

  LtiError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The ideal-link network is not stable, so no certificate is attempted.
class NominalUnstable : public Error {
 public:
  NominalUnstable(double abscissa, const std::string& what) : Error(what), abscissa_(abscissa) {}
  double abscissa() const { return abscissa_; }

 private:
  double abscissa_;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class BackendMissing : public Error {
 public:
  using Error::Error;
};

/// Model file problems; `where` is a JSON pointer or a "line:column" location.
class ModelError : public Error {
 public:
  ModelError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace netcert
