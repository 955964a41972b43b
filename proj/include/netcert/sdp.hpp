#pragma once

// Generic linear SDP in the form
//
//   maximize    b' y
//   subject to  C_j - sum_i y_i A_{j,i}  is positive semidefinite, each block j
//
// with optional scalar (diagonal) blocks for bound constraints. Backends
// implement `Backend`; "ipm" is the built-in primal-dual interior-point
// reference backend.

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace netcert::sdp {

struct Block {
  Eigen::MatrixXd C;
  /// (variable id, symmetric coefficient), ascending ids.
  std::vector<std::pair<int, Eigen::MatrixXd>> A;

  int dim() const { return static_cast<int>(C.rows()); }
};

/// One scalar constraint  c - a' y >= 0  with sparse a.
struct ScalarConstraint {
  double c = 0.0;
  std::vector<std::pair<int, double>> a;
};

struct Problem {
  int variables = 0;
  Eigen::VectorXd b;
  std::vector<Block> blocks;
  std::vector<ScalarConstraint> scalars;

  /// Plain-text dump: dimensions, then coefficient matrices per variable,
  /// row-major, full precision.
  void write(std::ostream& out) const;
};

struct Options {
  double tolerance = 1e-8;
  /// Accepted when progress stalls before `tolerance` is met.
  double stall_tolerance = 1e-6;
  int max_iterations = 100;
  bool verbose = false;
};

enum class Status { Optimal, NearOptimal, MaxIterations, NumericalError };

inline bool converged(Status s) { return s == Status::Optimal || s == Status::NearOptimal; }

std::string_view to_string(Status s);

struct Solution {
  Status status = Status::NumericalError;
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Must be safe to call concurrently from several threads.
  virtual Solution solve(const Problem& problem, const Options& options) const = 0;
};

/// Throws BackendMissing for unknown names.
std::unique_ptr<Backend> make_backend(std::string_view name);
std::vector<std::string> available_backends();

}  // namespace netcert::sdp
