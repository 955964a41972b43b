#include <catch_amalgamated.hpp>

#include <complex>

#include "canon.hpp"
#include "netcert/certify.hpp"
#include "netcert/lti.hpp"

using namespace netcert;
using Catch::Matchers::WithinAbs;
using cd = std::complex<double>;

namespace {

cd horner(const std::vector<double>& p, cd s) {
  cd v = 0.0;
  for (double c : p) v = v * s + c;
  return v;
}

std::vector<cd> sorted_eigenvalues(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  std::vector<cd> out(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
  std::sort(out.begin(), out.end(), [](cd a, cd b) { return a.real() < b.real(); });
  return out;
}

}  // namespace

TEST_CASE("realization reproduces the transfer function") {
  const std::vector<TransferFunction> cases{
      {{-1.0}, {1.0, 1.0, 2.0}}, {{5.0}, {1.0, 10.0}}, {{1.0, -3.0}, {1.0, 3.0, -4.0}}, {{2.0, 0.0, 1.0}, {1.0, 2.0, 3.0}}};
  for (const auto& g : cases) {
    const StateSpace ss = realize(g);
    for (cd s : {cd(0.0, 0.3), cd(0.0, 7.0), cd(1.5, -2.0), cd(0.0, 300.0)}) {
      const cd want = horner(g.num, s) / horner(g.den, s);
      CHECK(std::abs(ss.response(s)(0, 0) - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("broadcast agents repeat the scalar response on every input") {
  const AgentModel a = AgentModel::from_transfer_function(0, {{5.0}, {1.0, 10.0}}, 2);
  const Eigen::MatrixXcd r = a.H.frequency_response(1.0);
  REQUIRE(r.cols() == 2);
  CHECK(std::abs(r(0, 0) - 5.0 / cd(10.0, 1.0)) < 1e-12);
  CHECK(std::abs(r(0, 1) - r(0, 0)) < 1e-15);
}

TEST_CASE("spectral abscissa") {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -2, -3;  // poles -1, -2
  CHECK_THAT(spectral_abscissa(A), WithinAbs(-1.0, 1e-12));
}

TEST_CASE("coprime factors of the unstable canon") {
  const auto grid = log_grid(1e-3, 1e3, 50);
  for (const auto& c : testing::unstable_canon()) {
    INFO(c.label);
    const AgentModel a = AgentModel::from_transfer_function(0, c.g, c.inputs);
    const CoprimeFactors f = coprime_factorize(a);
    CHECK_FALSE(f.trivial);
    CHECK(spectral_abscissa(f.N.A()) < 0.0);
    CHECK(spectral_abscissa(f.U.A()) < 0.0);
    CHECK(bezout_residual(f, grid) <= 1e-8);
    CHECK(factorization_residual(a.H, f, grid) <= 1e-8);
    // N D^{-1} against the polynomial ratio at a point off the grid
    const cd s(0.0, 0.77);
    const Eigen::MatrixXcd nd = f.N.response(s) * f.D.response(s).inverse();
    const cd want = horner(c.g.num, s) / horner(c.g.den, s);
    for (int k = 0; k < c.inputs; ++k) CHECK(std::abs(nd(0, k) - want) <= 1e-8 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("pole placement gives the requested closed-loop poles") {
  const AgentModel a = AgentModel::from_transfer_function(0, {{1.0}, {1.0, 0.0, -1.0}}, 1);
  FactorizationOptions opt;
  opt.design = FeedbackDesign::PolePlacement;
  opt.poles = {cd(-2.0, 0.0), cd(-3.0, 0.0)};
  const CoprimeFactors f = coprime_factorize(a, opt);
  const auto ev = sorted_eigenvalues(f.D.A());
  CHECK_THAT(ev[0].real(), WithinAbs(-3.0, 1e-9));
  CHECK_THAT(ev[1].real(), WithinAbs(-2.0, 1e-9));
}

TEST_CASE("stable agents factor trivially") {
  const AgentModel a = AgentModel::from_transfer_function(0, {{-1.0}, {1.0, 1.0, 2.0}}, 2);
  const CoprimeFactors f = coprime_factorize(a);
  CHECK(f.trivial);
  CHECK((f.D.frequency_response(3.0) - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("path12 agents factor with small residuals") {
  const auto grid = log_grid(1e-3, 1e3, 50);
  for (const auto& g : testing::path12_agents()) {
    const AgentModel a = AgentModel::from_transfer_function(0, g, 2);
    const CoprimeFactors f = coprime_factorize(a);
    CHECK(bezout_residual(f, grid) <= 1e-8);
    CHECK(factorization_residual(a.H, f, grid) <= 1e-8);
  }
}

TEST_CASE("an uncontrollable unstable mode is rejected") {
  Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2), D = Eigen::MatrixXd::Zero(1, 1);
  A << 1, 0, 0, -1;
  B << 0, 1;
  C << 1, 1;
  try {
    coprime_factorize(AgentModel::from_state_space(0, StateSpace(A, B, C, D)));
    FAIL("expected LtiError");
  } catch (const LtiError& e) {
    CHECK(e.kind() == LtiError::Kind::Unstabilizable);
  }
}

TEST_CASE("Riccati solution satisfies the equation") {
  Eigen::MatrixXd A(3, 3), B(3, 1);
  A << 0, 1, 0, 0, 0, 1, 1, -2, 0.5;
  B << 0, 0, 1;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3), R = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd X = solve_care(A, B, Q, R);
  const Eigen::MatrixXd res = A.transpose() * X + X * A - X * B * B.transpose() * X + Q;
  CHECK(res.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(spectral_abscissa(A - B * B.transpose() * X) < 0.0);
}

TEST_CASE("two agents with closed-loop poles {0, -2} fail the nominal gate") {
  // x1' = -x1 + x2, x2' = -x2 + x1
  const GraphTopology g = path_graph(2);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 2; ++i) agents.push_back(AgentModel::from_transfer_function(i, {{1.0}, {1.0, 1.0}}, 1));
  const auto ev = sorted_eigenvalues(network_closed_loop(g, agents, Eigen::VectorXd::Ones(2)));
  CHECK_THAT(ev[0].real(), WithinAbs(-2.0, 1e-12));
  CHECK_THAT(ev[1].real(), WithinAbs(0.0, 1e-12));
  CHECK_FALSE(check_nominal_stability(g, agents).stable);
  const Network net(g, agents);
  CHECK_THROWS_AS(net.require_nominal_stability(), NominalUnstable);
}

TEST_CASE("the twelve-agent path is nominally stable") {
  const GraphTopology g = path_graph(12);
  std::vector<AgentModel> agents;
  const auto tf = testing::path12_agents();
  for (int i = 0; i < 12; ++i) agents.push_back(AgentModel::from_transfer_function(i, tf[i], g.degree(i)));
  const StabilityReport r = check_nominal_stability(g, agents);
  CHECK(r.stable);
  CHECK(r.abscissa < 0.0);
}

TEST_CASE("static feedthrough loops are detected") {
  const GraphTopology g = path_graph(2);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 2; ++i) {
    agents.push_back(AgentModel::from_state_space(i, StateSpace::gain(Eigen::MatrixXd::Ones(1, 1))));
  }
  try {
    network_closed_loop(g, agents, Eigen::VectorXd::Ones(2));
    FAIL("expected LtiError");
  } catch (const LtiError& e) {
    CHECK(e.kind() == LtiError::Kind::AlgebraicLoop);
  }
}

TEST_CASE("stacked realization is [N; D; I] of the listed agents") {
  const GraphTopology g = path_graph(3);
  std::vector<AgentModel> agents{AgentModel::from_transfer_function(0, {{1.0}, {1.0, -1.0}}, 1),
                                 AgentModel::from_transfer_function(1, {{2.0}, {1.0, 3.0}}, 2),
                                 AgentModel::from_transfer_function(2, {{1.0}, {1.0, 1.0, 1.0}}, 1)};
  std::vector<CoprimeFactors> f;
  for (const auto& a : agents) f.push_back(coprime_factorize(a));
  const std::vector<int> verts{0, 1};
  const StateSpace G = stacked_realization(g, verts, f);
  REQUIRE(G.outputs() == 2 + 2 * 3);
  REQUIRE(G.inputs() == 3);
  const double w = 0.9;
  const Eigen::MatrixXcd r = G.frequency_response(w);
  CHECK((r.block(0, 0, 1, 1) - f[0].N.frequency_response(w)).norm() < 1e-12);
  CHECK((r.block(1, 1, 1, 2) - f[1].N.frequency_response(w)).norm() < 1e-12);
  CHECK((r.block(2, 0, 1, 1) - f[0].D.frequency_response(w)).norm() < 1e-12);
  CHECK((r.block(3, 1, 2, 2) - f[1].D.frequency_response(w)).norm() < 1e-12);
  CHECK((r.bottomRows(3) - Eigen::MatrixXcd::Identity(3, 3)).norm() == 0.0);
  CHECK(std::abs(r(0, 1)) == 0.0);
}
