#include "netcert/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace netcert {

namespace {

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

double norm2(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  return svd.singularValues()(0);
}

std::vector<double> trim_leading_zeros(const std::vector<double>& p) {
  auto it = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
  return {it, p.end()};
}

}  // namespace

StateSpace::StateSpace(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, Eigen::MatrixXd D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  const auto nx = A_.rows();
  if (A_.cols() != nx || B_.rows() != nx || C_.cols() != nx || C_.rows() != D_.rows() || B_.cols() != D_.cols()) {
    throw LtiError(LtiError::Kind::DimensionMismatch,
                   "inconsistent realization: A " + std::to_string(A_.rows()) + "x" + std::to_string(A_.cols()) +
                       ", B " + std::to_string(B_.rows()) + "x" + std::to_string(B_.cols()) + ", C " +
                       std::to_string(C_.rows()) + "x" + std::to_string(C_.cols()) + ", D " +
                       std::to_string(D_.rows()) + "x" + std::to_string(D_.cols()));
  }
  if (!all_finite(A_) || !all_finite(B_) || !all_finite(C_) || !all_finite(D_)) {
    throw LtiError(LtiError::Kind::NotFinite, "realization has non-finite entries");
  }
}

StateSpace StateSpace::gain(const Eigen::MatrixXd& D) {
  return StateSpace(Eigen::MatrixXd(0, 0), Eigen::MatrixXd(0, D.cols()), Eigen::MatrixXd(D.rows(), 0), D);
}

Eigen::MatrixXcd StateSpace::response(std::complex<double> s) const {
  Eigen::MatrixXcd out = D_.cast<std::complex<double>>();
  if (states() == 0) return out;
  Eigen::MatrixXcd resolvent = -A_.cast<std::complex<double>>();
  resolvent.diagonal().array() += s;
  out += C_.cast<std::complex<double>>() * resolvent.partialPivLu().solve(B_.cast<std::complex<double>>());
  return out;
}

StateSpace block_diagonal(std::span<const StateSpace> systems) {
  int nx = 0, nu = 0, ny = 0;
  for (const auto& s : systems) {
    nx += s.states();
    nu += s.inputs();
    ny += s.outputs();
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx), B = Eigen::MatrixXd::Zero(nx, nu);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(ny, nx), D = Eigen::MatrixXd::Zero(ny, nu);
  int x = 0, u = 0, y = 0;
  for (const auto& s : systems) {
    A.block(x, x, s.states(), s.states()) = s.A();
    B.block(x, u, s.states(), s.inputs()) = s.B();
    C.block(y, x, s.outputs(), s.states()) = s.C();
    D.block(y, u, s.outputs(), s.inputs()) = s.D();
    x += s.states();
    u += s.inputs();
    y += s.outputs();
  }
  return StateSpace(A, B, C, D);
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  if (!A.allFinite()) throw LtiError(LtiError::Kind::NotFinite, "state matrix has non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

StabilityReport stability(const StateSpace& model, double margin) {
  double a = spectral_abscissa(model.A());
  return {a < -margin, a};
}

StateSpace balance(const StateSpace& model) {
  const int n = model.states();
  if (n == 0) return model;
  Eigen::MatrixXd A = model.A();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  constexpr double radix = 2.0;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        scale(i) *= f;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
  Eigen::MatrixXd B = scale.cwiseInverse().asDiagonal() * model.B();
  Eigen::MatrixXd C = model.C() * scale.asDiagonal();
  return StateSpace(A, B, C, model.D());
}

StateSpace realize(const TransferFunction& g) {
  std::vector<double> den = trim_leading_zeros(g.den);
  std::vector<double> num = trim_leading_zeros(g.num);
  if (den.empty()) throw LtiError(LtiError::Kind::DimensionMismatch, "transfer function denominator is zero");
  if (num.size() > den.size()) {
    throw LtiError(LtiError::Kind::DimensionMismatch, "transfer function is improper");
  }
  for (double c : den) {
    if (!std::isfinite(c)) throw LtiError(LtiError::Kind::NotFinite, "non-finite denominator coefficient");
  }
  for (double c : num) {
    if (!std::isfinite(c)) throw LtiError(LtiError::Kind::NotFinite, "non-finite numerator coefficient");
  }
  const int n = static_cast<int>(den.size()) - 1;
  const double lead = den.front();
  std::vector<double> a(n + 1), b(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) a[i] = den[i] / lead;
  for (std::size_t i = 0; i < num.size(); ++i) b[n + 1 - num.size() + i] = num[i] / lead;

  Eigen::MatrixXd D(1, 1);
  D(0, 0) = b[0];
  if (n == 0) return StateSpace::gain(D);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) A(n - 1, j) = -a[n - j];
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Eigen::MatrixXd C(1, n);
  for (int j = 0; j < n; ++j) C(0, j) = b[n - j] - b[0] * a[n - j];
  return balance(StateSpace(A, B, C, D));
}

AgentModel AgentModel::from_transfer_function(int id, const TransferFunction& g, int inputs) {
  StateSpace siso = realize(g);
  Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(inputs);
  StateSpace H(siso.A(), siso.B() * ones, siso.C(), siso.D() * ones);
  return AgentModel{id, std::move(H), g};
}

AgentModel AgentModel::from_state_space(int id, StateSpace H) {
  if (H.outputs() != 1) {
    throw LtiError(LtiError::Kind::DimensionMismatch,
                   "agent " + std::to_string(id + 1) + " must have exactly one output, has " +
                       std::to_string(H.outputs()));
  }
  return AgentModel{id, std::move(H), std::nullopt};
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return out;
}

double bezout_residual(const CoprimeFactors& f, std::span<const double> omegas) {
  double worst = 0.0;
  const int m = f.D.outputs();
  for (double w : omegas) {
    Eigen::MatrixXcd r = f.U.frequency_response(w) * f.N.frequency_response(w) +
                         f.V.frequency_response(w) * f.D.frequency_response(w) -
                         Eigen::MatrixXcd::Identity(m, m);
    worst = std::max(worst, norm2(r));
  }
  return worst;
}

double factorization_residual(const StateSpace& H, const CoprimeFactors& f, std::span<const double> omegas) {
  double worst = 0.0;
  for (double w : omegas) {
    if (H.states() > 0) {
      Eigen::MatrixXcd resolvent = -H.A().cast<std::complex<double>>();
      resolvent.diagonal().array() += std::complex<double>(0.0, w);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(resolvent);
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) < 1e-10 * sv(0)) continue;  // too close to a pole of H
    }
    Eigen::MatrixXcd h = H.frequency_response(w);
    Eigen::MatrixXcd nd = f.N.frequency_response(w) * f.D.frequency_response(w).inverse();
    worst = std::max(worst, norm2(h - nd) / (1.0 + norm2(h)));
  }
  return worst;
}

CoprimeFactors coprime_factorize(const AgentModel& agent, const FactorizationOptions& options) {
  const StateSpace& H = agent.H;
  const int nx = H.states();
  const int m = H.inputs();
  const auto grid = log_grid(1e-3, 1e3, options.grid_points);
  CoprimeFactors f;

  const Eigen::MatrixXd I_m = Eigen::MatrixXd::Identity(m, m);
  if (stability(H, options.margin).stable) {
    f.trivial = true;
    f.N = H;
    f.D = StateSpace(H.A(), H.B(), Eigen::MatrixXd::Zero(m, nx), I_m);
    f.U = StateSpace::gain(Eigen::MatrixXd::Zero(m, 1));
    f.V = StateSpace::gain(I_m);
    f.feedback = Eigen::MatrixXd::Zero(m, nx);
    f.observer = Eigen::MatrixXd::Zero(nx, 1);
  } else {
    const std::string who = "agent " + std::to_string(agent.id + 1);
    if (!stabilizable(H.A(), H.B(), options.margin)) {
      throw LtiError(LtiError::Kind::Unstabilizable, who + " has an uncontrollable unstable mode");
    }
    if (!stabilizable(H.A().transpose(), H.C().transpose(), options.margin)) {
      throw LtiError(LtiError::Kind::Unstabilizable, who + " has an unobservable unstable mode");
    }
    Eigen::MatrixXd F;
    if (options.design == FeedbackDesign::PolePlacement) {
      F = place_feedback(H.A(), H.B(), options.poles);
    } else {
      F = lqr_feedback(H.A(), H.B());
    }
    Eigen::MatrixXd L = lqr_feedback(H.A().transpose(), H.C().transpose()).transpose();
    const Eigen::MatrixXd AF = H.A() + H.B() * F;
    const Eigen::MatrixXd AL = H.A() + L * H.C();
    if (!(spectral_abscissa(AF) < -options.margin) || !(spectral_abscissa(AL) < -options.margin)) {
      throw LtiError(LtiError::Kind::Unstabilizable, who + ": feedback synthesis did not stabilize the realization");
    }
    f.trivial = false;
    f.N = StateSpace(AF, H.B(), H.C() + H.D() * F, H.D());
    f.D = StateSpace(AF, H.B(), F, I_m);
    f.U = StateSpace(AL, L, F, Eigen::MatrixXd::Zero(m, 1));
    f.V = StateSpace(AL, -(H.B() + L * H.D()), F, I_m);
    f.feedback = F;
    f.observer = L;
  }

  f.bezout_residual = bezout_residual(f, grid);
  f.factorization_residual = factorization_residual(H, f, grid);
  if (!(f.bezout_residual <= options.residual_tolerance) ||
      !(f.factorization_residual <= options.residual_tolerance)) {
    throw LtiError(LtiError::Kind::ResidualTooLarge,
                   "agent " + std::to_string(agent.id + 1) + ": coprime factor residuals " +
                       std::to_string(f.bezout_residual) + " / " + std::to_string(f.factorization_residual) +
                       " exceed tolerance");
  }
  return f;
}

StateSpace network_agents(const GraphTopology& topology, std::span<const AgentModel> agents) {
  if (static_cast<int>(agents.size()) != topology.vertex_count()) {
    throw LtiError(LtiError::Kind::DimensionMismatch, "expected " + std::to_string(topology.vertex_count()) +
                                                          " agents, got " + std::to_string(agents.size()));
  }
  std::vector<StateSpace> parts;
  parts.reserve(agents.size());
  for (int i = 0; i < topology.vertex_count(); ++i) {
    if (agents[i].H.inputs() != topology.degree(i) || agents[i].H.outputs() != 1) {
      throw LtiError(LtiError::Kind::DimensionMismatch,
                     "agent " + std::to_string(i + 1) + " must have " + std::to_string(topology.degree(i)) +
                         " inputs and one output");
    }
    parts.push_back(agents[i].H);
  }
  return block_diagonal(parts);
}

Eigen::MatrixXd network_closed_loop(const GraphTopology& topology, std::span<const AgentModel> agents,
                                    const Eigen::VectorXd& link_gains) {
  const StateSpace H = network_agents(topology, agents);
  const SubsystemMatrices sub = build_subsystem_matrices(topology);
  const int ports = topology.port_count();
  if (link_gains.size() != ports) {
    throw LtiError(LtiError::Kind::DimensionMismatch, "expected one gain per directed link");
  }
  // v = P Lambda T (C x + D v)
  const Eigen::MatrixXd route = sub.P * link_gains.asDiagonal() * sub.T;
  const Eigen::MatrixXd loop = Eigen::MatrixXd::Identity(ports, ports) - route * H.D();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(loop);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-10 * std::max(1.0, sv(0))) {
    throw LtiError(LtiError::Kind::AlgebraicLoop, "interconnection is ill-posed: I - P Lambda T D is singular");
  }
  const Eigen::MatrixXd v_of_x = loop.partialPivLu().solve(route * H.C());
  return H.A() + H.B() * v_of_x;
}

StabilityReport check_nominal_stability(const GraphTopology& topology, std::span<const AgentModel> agents,
                                        double margin) {
  Eigen::MatrixXd A = network_closed_loop(topology, agents, Eigen::VectorXd::Ones(topology.port_count()));
  double a = spectral_abscissa(A);
  return {a < -margin, a};
}

StateSpace stacked_realization(const GraphTopology& topology, std::span<const int> vertices,
                               std::span<const CoprimeFactors> factors) {
  if (static_cast<int>(factors.size()) != topology.vertex_count()) {
    throw LtiError(LtiError::Kind::MissingFactor, "coprime factors are required for every agent");
  }
  int nx = 0, m_hat = 0;
  const int n_p = static_cast<int>(vertices.size());
  for (int i : vertices) {
    if (factors[i].D.outputs() != topology.degree(i) || factors[i].N.outputs() != 1) {
      throw LtiError(LtiError::Kind::MissingFactor, "missing or malformed factors for agent " + std::to_string(i + 1));
    }
    nx += factors[i].order();
    m_hat += topology.degree(i);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx), B = Eigen::MatrixXd::Zero(nx, m_hat);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_p + 2 * m_hat, nx);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n_p + 2 * m_hat, m_hat);
  int x = 0, u = 0, row = 0;
  for (int i : vertices) {
    const auto& f = factors[i];
    const int ni = f.order(), mi = topology.degree(i);
    A.block(x, x, ni, ni) = f.N.A();
    B.block(x, u, ni, mi) = f.N.B();
    C.block(row, x, 1, ni) = f.N.C();
    D.block(row, u, 1, mi) = f.N.D();
    C.block(n_p + u, x, mi, ni) = f.D.C();
    D.block(n_p + u, u, mi, mi) = f.D.D();
    x += ni;
    u += mi;
    ++row;
  }
  D.bottomRows(m_hat) = Eigen::MatrixXd::Identity(m_hat, m_hat);
  return StateSpace(A, B, C, D);
}

}  // namespace netcert
