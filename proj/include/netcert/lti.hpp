#pragma once

// Continuous-time state-space algebra for the agents, their coprime factors
// and the ideal-link network.

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netcert/error.hpp"
#include "netcert/graph.hpp"

namespace netcert {

/// Real realization (A, B, C, D); zero states is a static gain.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, Eigen::MatrixXd D);

  static StateSpace gain(const Eigen::MatrixXd& D);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& D() const { return D_; }

  int states() const { return static_cast<int>(A_.rows()); }
  int inputs() const { return static_cast<int>(D_.cols()); }
  int outputs() const { return static_cast<int>(D_.rows()); }

  /// C (sI - A)^{-1} B + D.
  Eigen::MatrixXcd response(std::complex<double> s) const;
  Eigen::MatrixXcd frequency_response(double omega) const { return response({0.0, omega}); }

 private:
  Eigen::MatrixXd A_, B_, C_, D_;
};

StateSpace block_diagonal(std::span<const StateSpace> systems);

struct StabilityReport {
  bool stable = false;
  double abscissa = 0.0;
};

inline constexpr double kDefaultStabilityMargin = 1e-9;

double spectral_abscissa(const Eigen::MatrixXd& A);
StabilityReport stability(const StateSpace& model, double margin = kDefaultStabilityMargin);

/// Polynomial ratio with coefficients in descending powers of s.
struct TransferFunction {
  std::vector<double> num;
  std::vector<double> den;
};

/// Controllable companion form followed by diagonal similarity balancing.
StateSpace realize(const TransferFunction& g);

/// Diagonal similarity scaling (powers of two) that equalizes row and column
/// norms of A; the transfer function is unchanged.
StateSpace balance(const StateSpace& model);

/// Dynamics of one agent: m_i inputs ordered by the neighbour enumeration, one output.
struct AgentModel {
  int id = 0;
  StateSpace H;
  /// Set when H_i = g_i 1_{1,m_i}; realized with a single copy of g_i.
  std::optional<TransferFunction> broadcast;

  static AgentModel from_transfer_function(int id, const TransferFunction& g, int inputs);
  static AgentModel from_state_space(int id, StateSpace H);
};

enum class FeedbackDesign { Lqr, PolePlacement };

struct FactorizationOptions {
  FeedbackDesign design = FeedbackDesign::Lqr;
  /// Closed-loop poles for PolePlacement; empty mirrors the unstable modes.
  std::vector<std::complex<double>> poles;
  double margin = kDefaultStabilityMargin;
  double residual_tolerance = 1e-8;
  int grid_points = 50;
};

/// H = N D^{-1} with U N + V D = I; N and D share one realization state, as do U and V.
struct CoprimeFactors {
  StateSpace N;
  StateSpace D;
  StateSpace U;
  StateSpace V;
  /// True when H was already stable and N = H, D = I.
  bool trivial = true;
  Eigen::MatrixXd feedback;
  Eigen::MatrixXd observer;
  double bezout_residual = 0.0;
  double factorization_residual = 0.0;

  int order() const { return N.states(); }
};

std::vector<double> log_grid(double lo, double hi, int count);

double bezout_residual(const CoprimeFactors& f, std::span<const double> omegas);
double factorization_residual(const StateSpace& H, const CoprimeFactors& f, std::span<const double> omegas);

CoprimeFactors coprime_factorize(const AgentModel& agent, const FactorizationOptions& options = {});

/// Stabilizing solution X of A'X + XA - X B R^{-1} B' X + Q = 0.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R);
/// Unit-weight LQR gain F such that A + B F is Hurwitz.
Eigen::MatrixXd lqr_feedback(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::MatrixXd place_feedback(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               std::span<const std::complex<double>> poles);
bool stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double margin = kDefaultStabilityMargin);

/// Direct sum of the agent realizations; inputs are the 2m ports.
StateSpace network_agents(const GraphTopology& topology, std::span<const AgentModel> agents);

/// State matrix of the network with static link gains (v = P w, w = diag(gains) T H v).
Eigen::MatrixXd network_closed_loop(const GraphTopology& topology, std::span<const AgentModel> agents,
                                    const Eigen::VectorXd& link_gains);

/// Stability of the network with unity links.
StabilityReport check_nominal_stability(const GraphTopology& topology, std::span<const AgentModel> agents,
                                        double margin = kDefaultStabilityMargin);

/// [N_hat; D_hat; I] over the given (ascending) vertices with shared factor states.
StateSpace stacked_realization(const GraphTopology& topology, std::span<const int> vertices,
                               std::span<const CoprimeFactors> factors);

}  // namespace netcert
