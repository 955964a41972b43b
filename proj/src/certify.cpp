#include "netcert/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "netcert/error.hpp"

namespace netcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<CoprimeFactors> factorize_all(const std::vector<AgentModel>& agents, const FactorizationOptions& options) {
  std::vector<CoprimeFactors> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(coprime_factorize(a, options));
  return out;
}

double max_eigenvalue(const MatrixXd& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

}  // namespace

Network::Network(GraphTopology topology_, std::vector<AgentModel> agents_, const FactorizationOptions& options)
    : topology(std::move(topology_)), agents(std::move(agents_)) {
  if (static_cast<int>(agents.size()) != topology.vertex_count()) {
    throw LtiError(LtiError::Kind::DimensionMismatch, "expected " + std::to_string(topology.vertex_count()) +
                                                          " agents, got " + std::to_string(agents.size()));
  }
  for (int i = 0; i < topology.vertex_count(); ++i) {
    if (agents[i].H.inputs() != topology.degree(i) || agents[i].H.outputs() != 1) {
      throw LtiError(LtiError::Kind::DimensionMismatch,
                     "agent " + std::to_string(i + 1) + " must have " + std::to_string(topology.degree(i)) +
                         " inputs and one output");
    }
  }
  factors = factorize_all(agents, options);
  nominal = check_nominal_stability(topology, agents);
}

void Network::require_nominal_stability() const {
  if (!nominal.stable) {
    throw NominalUnstable(nominal.abscissa, "network with ideal links is not stable (spectral abscissa " +
                                                std::to_string(nominal.abscissa) + ")");
  }
}

ElementSizes element_sizes(const Network& network, const EdgePartition& partition, int p) {
  ElementSizes s;
  s.element = p;
  for (int i : partition.vertices(p)) {
    s.n_hat += network.factors[i].order();
    s.m_hat += network.topology.degree(i);
  }
  s.m_tilde = s.n_hat + s.m_hat;
  s.n_tilde = (s.n_hat * s.n_hat + s.n_hat) / 2 + s.m_hat + 1;
  s.n_reduced = s.n_tilde - s.m_hat;
  const double nr = s.n_reduced, nt = s.n_tilde, mt = s.m_tilde;
  s.newton_cost_fixed = nr * mt * mt * mt + nr * nr * mt * mt + nr * nr * nr;
  s.newton_cost_bound = nt * mt * mt * mt + nt * nt * mt * mt + nt * nt * nt;
  return s;
}

std::vector<ElementSizes> partition_sizes(const Network& network, const EdgePartition& partition) {
  std::vector<ElementSizes> out;
  for (int p = 0; p < partition.size(); ++p) out.push_back(element_sizes(network, partition, p));
  return out;
}

AffineMatrix symmetric_variable(int n, int first_id) {
  AffineMatrix out(n, n);
  int id = first_id;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b, ++id) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(a, b) = 1.0;
      e(b, a) = 1.0;
      out.add_term(id, e);
    }
  }
  return out;
}

MatrixXd LmiBlock::Q(std::span<const double> y) const {
  const int n = realization.states();
  MatrixXd q(n, n);
  int id = q_first;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b, ++id) {
      q(a, b) = y[id];
      q(b, a) = y[id];
    }
  }
  return q;
}

CertificateProblem build_problem(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                                 MultiplierMode mode) {
  if (!partition.admissible()) {
    const auto& issue = partition.issues().front();
    throw PartitionError(issue.kind, issue.element, issue.edge, issue.uncovered, issue.message);
  }
  const auto& topo = network.topology;
  CertificateProblem pr;
  pr.sector = sector;
  pr.mode = mode;
  pr.t_id = 0;
  int next = 1;
  if (mode == MultiplierMode::Free) {
    pr.lambda = MultiplierVariables::free(topo.port_count(), next);
    next += topo.port_count();
  } else {
    pr.lambda = MultiplierVariables::ones(topo.port_count());
  }
  for (int p = 0; p < partition.size(); ++p) {
    const LocalizedMatrices local = localized_matrices(topo, partition, p);
    LmiBlock blk;
    blk.element = p;
    blk.eps_id = next++;
    blk.parts = assemble_blocks(topo, partition, local, sector, pr.lambda, blk.eps_id);
    blk.realization = stacked_realization(topo, local.vertices, network.factors);
    const auto& G = blk.realization;
    const int nx = G.states(), nu = G.inputs();
    blk.q_first = next;
    next += nx * (nx + 1) / 2;

    AffineMatrix kyp(nx + nu, nx + nu);
    if (nx > 0) {
      const AffineMatrix Q = symmetric_variable(nx, blk.q_first);
      kyp.set_block(0, 0, G.A().transpose() * Q + Q * G.A());
      const AffineMatrix QB = Q * G.B();
      kyp.set_block(0, nx, QB);
      kyp.set_block(nx, 0, QB.transpose());
    }
    MatrixXd CD(G.outputs(), nx + nu);
    CD << G.C(), G.D();
    blk.lmi = kyp + congruence(CD, blk.parts.Phi_full);
    pr.blocks.push_back(std::move(blk));
  }
  pr.variables = next;
  return pr;
}

sdp::Problem CertificateProblem::to_sdp(const CertifyOptions& options, const std::vector<int>& subset,
                                        std::vector<int>* ids) const {
  std::vector<int> chosen = subset;
  if (chosen.empty()) {
    chosen.resize(blocks.size());
    std::iota(chosen.begin(), chosen.end(), 0);
  }
  std::map<int, int> local;
  local[t_id] = 0;
  for (int b : chosen) {
    for (const auto& [id, coef] : blocks.at(b).lmi.terms()) local.emplace(id, 0);
    local.emplace(blocks[b].eps_id, 0);
  }
  int next = 0;
  std::vector<int> global;
  for (auto& [id, l] : local) {
    l = next++;
    global.push_back(id);
  }

  sdp::Problem out;
  out.variables = next;
  out.b = VectorXd::Zero(next);
  out.b(local.at(t_id)) = 1.0;
  for (int b : chosen) {
    const auto& lmi = blocks[b].lmi;
    const int d = static_cast<int>(lmi.rows());
    sdp::Block blk;
    blk.C = -0.5 * (lmi.constant() + lmi.constant().transpose());
    blk.A.emplace_back(local.at(t_id), MatrixXd::Identity(d, d));
    for (const auto& [id, coef] : lmi.terms()) {
      blk.A.emplace_back(local.at(id), 0.5 * (coef + coef.transpose()));
    }
    out.blocks.push_back(std::move(blk));
  }
  out.scalars.push_back({options.t_cap, {{local.at(t_id), 1.0}}});
  for (const auto& [id, l] : local) {
    if (id == t_id) continue;
    const bool is_eps = std::any_of(chosen.begin(), chosen.end(), [&](int b) { return blocks[b].eps_id == id; });
    const bool is_lambda = mode == MultiplierMode::Free && id >= 1 && id <= lambda.port_count();
    if (is_eps) out.scalars.push_back({-options.eps_floor, {{l, -1.0}}});
    if (is_lambda) {
      out.scalars.push_back({-options.lambda_floor, {{l, -1.0}}});
      out.scalars.push_back({options.lambda_cap, {{l, 1.0}}});
    }
  }
  if (ids) *ids = std::move(global);
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible:
      return "feasible";
    case Verdict::Infeasible:
      return "infeasible";
    case Verdict::NotEvaluated:
      return "not-evaluated";
    case Verdict::SolverError:
      return "solver-error";
  }
  return "unknown";
}

VerificationReport verify_solution(const CertificateProblem& problem, const VectorXd& y, double t_star,
                                   const CertifyOptions& options) {
  VerificationReport rep;
  const std::span<const double> yv(y.data(), static_cast<std::size_t>(y.size()));
  const VectorXd lambda = problem.lambda.values(yv);
  rep.lambda_min = lambda.size() ? lambda.minCoeff() : 0.0;
  if (problem.mode == MultiplierMode::Free && rep.lambda_min < options.lambda_floor * (1.0 - 1e-6)) {
    rep.flagged = true;
    rep.message = "multiplier below its floor";
  }
  const std::vector<double> omegas = log_grid(1e-3, 1e3, options.fdi_points);
  for (const auto& blk : problem.blocks) {
    const auto& G = blk.realization;
    const int nx = G.states(), nu = G.inputs();
    const double eps = y(blk.eps_id);
    const MatrixXd phi = blk.parts.Phi.evaluate(yv);
    const int np = static_cast<int>(phi.rows());
    MatrixXd phi_full = MatrixXd::Zero(np + nu, np + nu);
    phi_full.topLeftCorner(np, np) = phi;
    phi_full.bottomRightCorner(nu, nu) = eps * blk.parts.W;

    MatrixXd M = MatrixXd::Zero(nx + nu, nx + nu);
    if (nx > 0) {
      const MatrixXd Q = blk.Q(yv);
      M.topLeftCorner(nx, nx) = G.A().transpose() * Q + Q * G.A();
      M.topRightCorner(nx, nu) = Q * G.B();
      M.bottomLeftCorner(nu, nx) = G.B().transpose() * Q;
    }
    MatrixXd CD(G.outputs(), nx + nu);
    CD << G.C(), G.D();
    M += CD.transpose() * phi_full * CD;

    BlockCheck chk;
    chk.element = blk.element;
    chk.max_eig = max_eigenvalue(M);
    chk.fdi_max_eig = -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXcd pc = phi_full.cast<std::complex<double>>();
    for (double w : omegas) {
      const Eigen::MatrixXcd g = G.frequency_response(w);
      const Eigen::MatrixXcd f = g.adjoint() * pc * g;
      const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(0.5 * (f + f.adjoint()), Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .maxCoeff();
      chk.fdi_max_eig = std::max(chk.fdi_max_eig, top);
    }
    if (chk.max_eig > -t_star / 2.0) {
      rep.flagged = true;
      rep.message = "element " + std::to_string(blk.element + 1) + " has max eigenvalue " +
                    std::to_string(chk.max_eig) + " above -t*/2";
    } else if (chk.fdi_max_eig > options.fdi_slack) {
      rep.flagged = true;
      rep.message = "element " + std::to_string(blk.element + 1) + " violates the frequency-domain inequality";
    }
    rep.blocks.push_back(chk);
  }
  return rep;
}

namespace {

struct PartSolve {
  std::vector<int> ids;
  sdp::Solution sol;
};

PartSolve solve_part(const CertificateProblem& problem, const CertifyOptions& options, const sdp::Backend& backend,
                     const std::vector<int>& subset, const std::string& dump_suffix) {
  PartSolve out;
  const sdp::Problem sp = problem.to_sdp(options, subset, &out.ids);
  if (options.dump_path) {
    std::ofstream f(*options.dump_path + dump_suffix);
    if (!f) throw Error("cannot write SDP dump to " + *options.dump_path + dump_suffix);
    sp.write(f);
  }
  out.sol = backend.solve(sp, options.sdp);
  return out;
}

}  // namespace

CertificateResult solve(const CertificateProblem& problem, const CertifyOptions& options) {
  const auto backend = sdp::make_backend(options.backend);
  std::vector<std::vector<int>> parts;
  if (problem.mode == MultiplierMode::Free) {
    parts.emplace_back();
  } else {
    for (std::size_t b = 0; b < problem.blocks.size(); ++b) parts.push_back({static_cast<int>(b)});
  }

  std::vector<PartSolve> solved(parts.size());
  auto run = [&](std::size_t k) {
    const std::string suffix = parts.size() > 1 ? ".element" + std::to_string(k + 1) : "";
    solved[k] = solve_part(problem, options, *backend, parts[k], suffix);
  };
  const int jobs = std::clamp(options.block_jobs, 1, static_cast<int>(parts.size()));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < parts.size(); ++k) run(k);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = cursor.fetch_add(1)) < parts.size();) run(k);
      });
    }
  }

  CertificateResult res;
  res.y = VectorXd::Zero(problem.variables);
  res.t_star = std::numeric_limits<double>::infinity();
  res.status = sdp::Status::Optimal;
  for (const auto& ps : solved) {
    for (std::size_t l = 0; l < ps.ids.size(); ++l) {
      if (ps.ids[l] != problem.t_id) res.y(ps.ids[l]) = ps.sol.y(static_cast<Eigen::Index>(l));
    }
    res.t_star = std::min(res.t_star, ps.sol.dual_objective);
    res.iterations += ps.sol.iterations;
    res.seconds += ps.sol.seconds;
    if (ps.sol.status != sdp::Status::Optimal && res.status != sdp::Status::NumericalError) res.status = ps.sol.status;
  }
  res.y(problem.t_id) = res.t_star;
  const std::span<const double> yv(res.y.data(), static_cast<std::size_t>(res.y.size()));
  res.lambda = problem.lambda.values(yv);
  for (const auto& blk : problem.blocks) res.eps.push_back(res.y(blk.eps_id));
  res.verification = verify_solution(problem, res.y, res.t_star, options);

  if (res.t_star >= options.t_accept) {
    if (!res.verification.flagged) {
      res.verdict = Verdict::Feasible;
      res.numerical_warning = !sdp::converged(res.status);
    } else {
      res.verdict = Verdict::SolverError;
      res.numerical_warning = true;
      res.message = "solver margin not confirmed: " + res.verification.message;
    }
  } else if (sdp::converged(res.status)) {
    res.verdict = Verdict::Infeasible;
  } else {
    // An unconverged run still decides when the primal bound is below the threshold.
    double bound = -std::numeric_limits<double>::infinity();
    bool usable = true;
    for (const auto& ps : solved) {
      usable = usable && ps.sol.primal_infeasibility < 1e-6;
      bound = std::max(bound, ps.sol.primal_objective);
    }
    if (problem.mode == MultiplierMode::Fixed) {
      bound = std::numeric_limits<double>::infinity();
      for (const auto& ps : solved) {
        if (ps.sol.primal_infeasibility < 1e-6) bound = std::min(bound, ps.sol.primal_objective);
      }
      usable = std::isfinite(bound);
    }
    if (usable && bound < options.t_accept) {
      res.verdict = Verdict::Infeasible;
      res.numerical_warning = true;
    } else {
      res.verdict = Verdict::SolverError;
      res.message = "solver stopped with status " + std::string(sdp::to_string(res.status));
    }
  }
  return res;
}

CertificateResult certify(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                          MultiplierMode mode, const CertifyOptions& options) {
  network.require_nominal_stability();
  if (!sector.contains_zero()) {
    CertificateResult res;
    res.verdict = Verdict::NotEvaluated;
    res.message = "sector does not contain zero";
    return res;
  }
  return solve(build_problem(network, partition, sector, mode), options);
}

CertificateResult certify_monolithic(const Network& network, const SectorBounds& sector, MultiplierMode mode,
                                     const CertifyOptions& options) {
  std::vector<int> all(network.topology.edge_count());
  std::iota(all.begin(), all.end(), 0);
  const EdgePartition whole = build_partition(network.topology, {all});
  return certify(network, whole, sector, mode, options);
}

}  // namespace netcert
