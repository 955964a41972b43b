#include "netcert/multiplier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace netcert {

SectorBounds::SectorBounds(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw std::invalid_argument("sector bounds must be finite");
  if (beta > alpha) {
    throw std::invalid_argument("sector requires beta <= alpha, got beta=" + std::to_string(beta) +
                                " alpha=" + std::to_string(alpha));
  }
}

SectorBounds SectorBounds::from_angles_deg(double theta1, double theta2) {
  constexpr double deg = std::numbers::pi / 180.0;
  return SectorBounds(std::tan(theta2 * deg), std::tan(theta1 * deg));
}

MultiplierVariables MultiplierVariables::free(int ports, int first_id) {
  MultiplierVariables v;
  v.mode_ = MultiplierMode::Free;
  v.ports_ = ports;
  v.first_id_ = first_id;
  return v;
}

MultiplierVariables MultiplierVariables::fixed(Eigen::VectorXd values) {
  MultiplierVariables v;
  v.mode_ = MultiplierMode::Fixed;
  v.ports_ = static_cast<int>(values.size());
  v.values_ = std::move(values);
  return v;
}

int MultiplierVariables::id(int port) const {
  if (mode_ != MultiplierMode::Free) throw std::logic_error("fixed multipliers have no variable ids");
  return first_id_ + port;
}

Eigen::VectorXd MultiplierVariables::values(std::span<const double> y) const {
  if (mode_ == MultiplierMode::Fixed) return values_;
  Eigen::VectorXd out(ports_);
  for (int r = 0; r < ports_; ++r) out(r) = y[first_id_ + r];
  return out;
}

void MultiplierVariables::accumulate(AffineMatrix& x, int port, const Eigen::MatrixXd& coefficient) const {
  if (mode_ == MultiplierMode::Free) {
    x.add_term(id(port), coefficient);
  } else {
    x += AffineMatrix(values_(port) * coefficient);
  }
}

Eigen::MatrixXd SectorMultiplier::matrix() const {
  const auto m = pi3.rows();
  Eigen::MatrixXd out(m + 1, m + 1);
  out(0, 0) = pi1;
  out.block(0, 1, 1, m) = pi2;
  out.block(1, 0, m, 1) = pi2.transpose();
  out.block(1, 1, m, m) = pi3;
  return out;
}

SectorMultiplier sector_multiplier(const SectorBounds& sector, std::span<const double> lambda) {
  const auto m = static_cast<Eigen::Index>(lambda.size());
  SectorMultiplier out;
  out.pi2.resize(m);
  out.pi3 = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    out.pi1 += -2.0 * sector.alpha * sector.beta * lambda[k];
    out.pi2(k) = (sector.alpha + sector.beta) * lambda[k];
    out.pi3(k, k) = -2.0 * lambda[k];
  }
  return out;
}

AssembledBlocks assemble_blocks(const GraphTopology& topology, const EdgePartition& partition,
                                const LocalizedMatrices& local, const SectorBounds& sector,
                                const MultiplierVariables& lambda, int eps_id) {
  AssembledBlocks out;
  out.element = local.element;
  out.n_p = static_cast<int>(local.vertices.size());
  out.m_hat = local.m_hat;
  out.eps_id = eps_id;
  const int n_p = out.n_p, m_hat = out.m_hat, dim = n_p + m_hat;

  // Pi_hat: each port contributes lambda times a fixed 3-entry pattern.
  out.Pi_hat = AffineMatrix(dim, dim);
  out.Xi.resize(dim);
  int q = 0;
  for (int a = 0; a < n_p; ++a) {
    const int i = local.vertices[a];
    const double xi = partition.xi(i).value();
    out.Xi(a) = xi;
    for (int k = 0; k < topology.degree(i); ++k, ++q) {
      Eigen::MatrixXd pattern = Eigen::MatrixXd::Zero(dim, dim);
      pattern(a, a) = -2.0 * sector.alpha * sector.beta;
      pattern(a, n_p + q) = sector.alpha + sector.beta;
      pattern(n_p + q, a) = sector.alpha + sector.beta;
      pattern(n_p + q, n_p + q) = -2.0;
      lambda.accumulate(out.Pi_hat, local.ports[q], pattern);
      out.Xi(n_p + q) = xi;
    }
  }
  const Eigen::MatrixXd root = out.Xi.cwiseSqrt().asDiagonal();
  out.Pi_tilde = root * out.Pi_hat * root;

  out.H = Eigen::MatrixXd::Zero(m_hat, m_hat);
  for (std::size_t e = 0; e < local.edges.size(); ++e) {
    out.H += partition.eta(local.edges[e]).value() * local.L_hat[e];
  }

  const AffineMatrix Pi3 = out.Pi3();
  out.Z = AffineMatrix(m_hat, m_hat);
  for (std::size_t e = 0; e < local.edges.size(); ++e) {
    const int k = local.edges[e];
    const Eigen::MatrixXd& Lk = local.L_hat[e];
    out.Z += partition.zeta(k).value() * (Lk * Pi3 * Lk);
    for (int l : partition.adjacent_edges(k)) {
      if (!partition.contains_edge(local.element, l)) continue;
      const Eigen::MatrixXd& Ll = local.L_hat[local.position_of_edge(l)];
      out.Z += partition.theta(k, l).value() * (Lk * Pi3 * Ll);
    }
  }

  out.W = Eigen::MatrixXd::Zero(m_hat, m_hat);
  q = 0;
  for (int a = 0; a < n_p; ++a) {
    const int i = local.vertices[a];
    for (int k = 0; k < topology.degree(i); ++k, ++q) out.W(q, q) = partition.omega(i).value();
  }

  out.S = Eigen::MatrixXd::Zero(n_p + 2 * m_hat, dim);
  out.S.topLeftCorner(n_p, n_p).setIdentity();
  out.S.block(n_p, 0, m_hat, n_p) = -local.T_hat;
  out.S.block(n_p, n_p, m_hat, m_hat).setIdentity();
  out.S.block(n_p + m_hat, n_p, m_hat, m_hat) = -Eigen::MatrixXd::Identity(m_hat, m_hat);

  const AffineMatrix coupling = out.Pi_hat.block(0, n_p, dim, m_hat) * out.H;
  AffineMatrix center(dim + m_hat, dim + m_hat);
  center.set_block(0, 0, out.Pi_tilde);
  center.set_block(0, dim, coupling);
  center.set_block(dim, 0, coupling.transpose());
  center.set_block(dim, dim, out.Z);
  out.Phi = congruence(out.S, center);

  const AffineMatrix eps_w = AffineMatrix::variable(eps_id, out.W);
  const AffineMatrix parts[] = {out.Phi, eps_w};
  out.Phi_full = direct_sum(parts);
  return out;
}

PsiEvaluator::PsiEvaluator(const GraphTopology& topology, std::vector<CoprimeFactors> factors,
                           const SectorBounds& sector, Eigen::VectorXd lambda)
    : topology_(topology), factors_(std::move(factors)) {
  const int n = topology.vertex_count(), ports = topology.port_count();
  if (static_cast<int>(factors_.size()) != n) throw std::invalid_argument("one factor pair per agent required");
  if (lambda.size() != ports) throw std::invalid_argument("one multiplier per port required");
  T_ = build_subsystem_matrices(topology).T;
  pi_ = Eigen::MatrixXd::Zero(n + ports, n + ports);
  for (int i = 0; i < n; ++i) {
    const int off = topology.offset(i), mi = topology.degree(i);
    std::vector<double> li(lambda.data() + off, lambda.data() + off + mi);
    SectorMultiplier s = sector_multiplier(sector, li);
    pi_(i, i) = s.pi1;
    pi_.block(i, n + off, 1, mi) = s.pi2;
    pi_.block(n + off, i, mi, 1) = s.pi2.transpose();
    pi_.block(n + off, n + off, mi, mi) = s.pi3;
  }
}

Eigen::MatrixXcd PsiEvaluator::N(double omega) const {
  const int n = topology_.vertex_count(), ports = topology_.port_count();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, ports);
  for (int i = 0; i < n; ++i) {
    out.block(i, topology_.offset(i), 1, topology_.degree(i)) = factors_[i].N.frequency_response(omega);
  }
  return out;
}

Eigen::MatrixXcd PsiEvaluator::D(double omega) const {
  const int ports = topology_.port_count();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(ports, ports);
  for (int i = 0; i < topology_.vertex_count(); ++i) {
    const int off = topology_.offset(i), mi = topology_.degree(i);
    out.block(off, off, mi, mi) = factors_[i].D.frequency_response(omega);
  }
  return out;
}

Eigen::MatrixXcd PsiEvaluator::J(double omega) const {
  return D(omega) - T_.cast<std::complex<double>>() * N(omega);
}

PsiEvaluator::Blocks PsiEvaluator::at(double omega) const {
  const int n = topology_.vertex_count(), ports = topology_.port_count();
  const Eigen::MatrixXcd Nw = N(omega), Jw = J(omega);
  Eigen::MatrixXcd left(n + ports, ports);
  left << Nw, Jw;
  const Eigen::MatrixXcd pi = pi_.cast<std::complex<double>>();
  Blocks out;
  out.psi1 = left.adjoint() * pi * left;
  out.psi2 = -(left.adjoint() * pi.rightCols(ports));
  out.psi3 = pi.bottomRightCorner(ports, ports);
  return out;
}

}  // namespace netcert
