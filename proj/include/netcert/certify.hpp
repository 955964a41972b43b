#pragma once

// Localized KYP certificates: one LMI per partition element, coupled through
// the link multipliers in FREE mode, decoupled (lambda = 1) in FIXED mode.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netcert/affine.hpp"
#include "netcert/graph.hpp"
#include "netcert/lti.hpp"
#include "netcert/multiplier.hpp"
#include "netcert/sdp.hpp"

namespace netcert {

/// Topology, agent dynamics and their coprime factors.
struct Network {
  GraphTopology topology;
  std::vector<AgentModel> agents;
  std::vector<CoprimeFactors> factors;
  StabilityReport nominal;

  Network(GraphTopology topology, std::vector<AgentModel> agents, const FactorizationOptions& options = {});

  /// Throws NominalUnstable unless the unity-link network is stable.
  void require_nominal_stability() const;
};

struct ElementSizes {
  int element = 0;
  int n_hat = 0;
  int m_hat = 0;
  int m_tilde = 0;
  int n_tilde = 0;
  int n_reduced = 0;
  /// n_reduced m~^3 + n_reduced^2 m~^2 + n_reduced^3.
  double newton_cost_fixed = 0.0;
  /// n~ m~^3 + n~^2 m~^2 + n~^3.
  double newton_cost_bound = 0.0;
};

ElementSizes element_sizes(const Network& network, const EdgePartition& partition, int p);
std::vector<ElementSizes> partition_sizes(const Network& network, const EdgePartition& partition);

struct CertifyOptions {
  std::string backend = "ipm";
  double t_accept = 1e-7;
  double t_cap = 1e3;
  double eps_floor = 1e-9;
  double lambda_floor = kLambdaFloor;
  /// FREE-mode normalization of the homogeneous multiplier scale.
  double lambda_cap = 1.0;
  sdp::Options sdp;
  /// Worker threads for FIXED-mode blocks (1 = sequential).
  int block_jobs = 1;
  int fdi_points = 50;
  double fdi_slack = 1e-6;
  /// When set, every SDP is written there before solving.
  std::optional<std::string> dump_path;
};

/// KYP LMI of one element: [[A'Q+QA, QB], [B'Q, 0]] + [C D]' Phi_full [C D].
struct LmiBlock {
  int element = 0;
  StateSpace realization;
  AssembledBlocks parts;
  int eps_id = -1;
  int q_first = -1;
  AffineMatrix lmi;

  int dim() const { return static_cast<int>(lmi.rows()); }
  Eigen::MatrixXd Q(std::span<const double> y) const;
};

/// Decision vector: [t, lambda (FREE only), then per element eps_p and Q_p].
struct CertificateProblem {
  SectorBounds sector;
  MultiplierMode mode = MultiplierMode::Free;
  int variables = 0;
  int t_id = 0;
  MultiplierVariables lambda;
  std::vector<LmiBlock> blocks;

  /// Generic SDP over the given blocks (all when empty), ids compacted.
  sdp::Problem to_sdp(const CertifyOptions& options, const std::vector<int>& subset = {},
                      std::vector<int>* ids = nullptr) const;
};

/// Symmetric-matrix coordinates: (a, b) with a <= b in row-major order.
AffineMatrix symmetric_variable(int n, int first_id);

CertificateProblem build_problem(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                                 MultiplierMode mode);

enum class Verdict { Feasible, Infeasible, NotEvaluated, SolverError };

std::string_view to_string(Verdict v);

struct BlockCheck {
  int element = 0;
  double max_eig = 0.0;
  double fdi_max_eig = 0.0;
};

struct VerificationReport {
  std::vector<BlockCheck> blocks;
  double lambda_min = 0.0;
  bool flagged = false;
  std::string message;
};

struct CertificateResult {
  Verdict verdict = Verdict::NotEvaluated;
  double t_star = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd lambda;
  std::vector<double> eps;
  sdp::Status status = sdp::Status::NumericalError;
  int iterations = 0;
  double seconds = 0.0;
  VerificationReport verification;
  /// Set when the solver reached the acceptance level but the independent
  /// re-check did not confirm it.
  bool numerical_warning = false;
  std::string message;
};

CertificateResult solve(const CertificateProblem& problem, const CertifyOptions& options = {});

/// Re-evaluates every block from the realization and numerical multipliers.
VerificationReport verify_solution(const CertificateProblem& problem, const Eigen::VectorXd& y, double t_star,
                                   const CertifyOptions& options = {});

/// Convenience: build, solve and verify for one sector point.
CertificateResult certify(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                          MultiplierMode mode, const CertifyOptions& options = {});

/// The single-element partition, equivalent to the monolithic certificate.
CertificateResult certify_monolithic(const Network& network, const SectorBounds& sector, MultiplierMode mode,
                                     const CertifyOptions& options = {});

}  // namespace netcert
