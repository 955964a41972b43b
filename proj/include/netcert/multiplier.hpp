#pragma once

// Static sector multipliers for the link uncertainty and the per-element
// blocks of the localized KYP condition, all affine in the multiplier
// scalars lambda (one per directed link, i.e. per port) and epsilon_p.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netcert/affine.hpp"
#include "netcert/graph.hpp"
#include "netcert/lti.hpp"

namespace netcert {

/// Sector [beta, alpha] on the gain of each link deviation Lambda_{i,k} - 1.
struct SectorBounds {
  double alpha = 0.0;
  double beta = 0.0;

  SectorBounds() = default;
  SectorBounds(double alpha, double beta);
  /// (alpha, beta) = (tan theta2, tan theta1), angles in degrees.
  static SectorBounds from_angles_deg(double theta1, double theta2);

  bool contains_zero() const { return beta <= 0.0 && 0.0 <= alpha; }
};

enum class MultiplierMode { Free, Fixed };

inline constexpr double kLambdaFloor = 1e-7;

/// lambda_{i,k} indexed by port r = offset(i) + k.
class MultiplierVariables {
 public:
  /// Decision variables with ids first_id, ..., first_id + ports - 1.
  static MultiplierVariables free(int ports, int first_id);
  static MultiplierVariables fixed(Eigen::VectorXd values);
  static MultiplierVariables ones(int ports) { return fixed(Eigen::VectorXd::Ones(ports)); }

  MultiplierMode mode() const { return mode_; }
  int port_count() const { return ports_; }
  int id(int port) const;
  /// Numerical lambda given a decision vector (ignored in fixed mode).
  Eigen::VectorXd values(std::span<const double> y = {}) const;

  /// Adds lambda_port * coefficient to x.
  void accumulate(AffineMatrix& x, int port, const Eigen::MatrixXd& coefficient) const;

 private:
  MultiplierMode mode_ = MultiplierMode::Fixed;
  int ports_ = 0;
  int first_id_ = -1;
  Eigen::VectorXd values_;
};

/// Pi_i = [[Pi1, Pi2], [Pi2', Pi3]] of one agent.
struct SectorMultiplier {
  double pi1 = 0.0;
  Eigen::RowVectorXd pi2;
  Eigen::MatrixXd pi3;

  Eigen::MatrixXd matrix() const;
};

SectorMultiplier sector_multiplier(const SectorBounds& sector, std::span<const double> lambda);

/// Localized blocks of one partition element; matrices are affine in
/// (lambda, epsilon_p) where marked.
struct AssembledBlocks {
  int element = 0;
  int n_p = 0;
  int m_hat = 0;
  int eps_id = -1;

  /// [[Pi1_hat, Pi2_hat], [Pi2_hat', Pi3_hat]], (n_p + m_hat) square.
  AffineMatrix Pi_hat;
  /// Diagonal scaling (xi_i) + (xi_i I_{m_i}).
  Eigen::VectorXd Xi;
  AffineMatrix Pi_tilde;
  Eigen::MatrixXd H;
  AffineMatrix Z;
  Eigen::MatrixXd W;
  Eigen::MatrixXd S;
  /// S' [[Pi_tilde, [Pi2;Pi3] H], [H [Pi2' Pi3'], Z]] S, (n_p + m_hat) square.
  AffineMatrix Phi;
  /// Phi + epsilon_p W, (n_p + 2 m_hat) square.
  AffineMatrix Phi_full;

  AffineMatrix Pi1() const { return Pi_hat.block(0, 0, n_p, n_p); }
  AffineMatrix Pi2() const { return Pi_hat.block(0, n_p, n_p, m_hat); }
  AffineMatrix Pi3() const { return Pi_hat.block(n_p, n_p, m_hat, m_hat); }
};

AssembledBlocks assemble_blocks(const GraphTopology& topology, const EdgePartition& partition,
                                const LocalizedMatrices& local, const SectorBounds& sector,
                                const MultiplierVariables& lambda, int eps_id);

/// Frequency-domain evaluator of the monolithic multiplier
/// Psi = [N* J*; 0 -I] Pi [N 0; J -I] for fixed numerical lambda.
class PsiEvaluator {
 public:
  struct Blocks {
    Eigen::MatrixXcd psi1;
    Eigen::MatrixXcd psi2;
    Eigen::MatrixXcd psi3;
  };

  PsiEvaluator(const GraphTopology& topology, std::vector<CoprimeFactors> factors, const SectorBounds& sector,
               Eigen::VectorXd lambda);

  /// Full Pi over (y, u) in R^n x R^{2m}.
  const Eigen::MatrixXd& pi() const { return pi_; }
  Eigen::MatrixXcd N(double omega) const;
  Eigen::MatrixXcd D(double omega) const;
  Eigen::MatrixXcd J(double omega) const;
  Blocks at(double omega) const;

 private:
  GraphTopology topology_;
  std::vector<CoprimeFactors> factors_;
  Eigen::MatrixXd T_;
  Eigen::MatrixXd pi_;
};

}  // namespace netcert
