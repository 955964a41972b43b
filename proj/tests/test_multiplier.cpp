#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "netcert/certify.hpp"
#include "netcert/multiplier.hpp"
#include "netcert/validate.hpp"

using namespace netcert;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("sector bounds from angles") {
  const SectorBounds s = SectorBounds::from_angles_deg(-30.0, 45.0);
  CHECK_THAT(s.alpha, WithinRel(1.0, 1e-14));
  CHECK_THAT(s.beta, WithinRel(-std::tan(std::numbers::pi / 6), 1e-14));
  CHECK(s.contains_zero());
  CHECK_FALSE(SectorBounds::from_angles_deg(10.0, 20.0).contains_zero());
}

TEST_CASE("agent multiplier entries") {
  const SectorBounds s(2.0, -0.5);
  const std::vector<double> lambda{0.3, 1.7};
  const SectorMultiplier m = sector_multiplier(s, lambda);
  CHECK_THAT(m.pi1, WithinAbs(-2.0 * 2.0 * -0.5 * 2.0, 1e-15));
  CHECK_THAT(m.pi2(0), WithinAbs(1.5 * 0.3, 1e-15));
  CHECK_THAT(m.pi2(1), WithinAbs(1.5 * 1.7, 1e-15));
  CHECK_THAT(m.pi3(0, 0), WithinAbs(-0.6, 1e-15));
  CHECK_THAT(m.pi3(1, 1), WithinAbs(-3.4, 1e-15));
  CHECK(m.pi3(0, 1) == 0.0);
}

TEST_CASE("in-sector gains satisfy the quadratic constraint, out-of-sector gains can violate it") {
  Rng rng = seeded_rng("unit/iqc");
  std::uniform_real_distribution<double> u01(0.0, 1.0), ang(-85.0, 85.0);
  for (int t = 0; t < 200; ++t) {
    double a = ang(rng), b = ang(rng);
    if (a > b) std::swap(a, b);
    const SectorBounds s = SectorBounds::from_angles_deg(a, b);
    const int ports = 1 + t % 4;
    std::vector<double> lambda(ports);
    for (double& l : lambda) l = 0.1 + u01(rng);
    const MatrixXd Pi = sector_multiplier(s, lambda).matrix();
    const double y = u01(rng) - 0.5;
    VectorXd z(1 + ports);
    z(0) = y;
    for (int r = 0; r < ports; ++r) z(1 + r) = (s.beta + u01(rng) * (s.alpha - s.beta)) * y;
    CHECK(z.dot(Pi * z) >= -1e-12 * (1.0 + z.squaredNorm()));
    if (s.alpha - s.beta > 1e-3 && std::abs(y) > 1e-3) {
      z.tail(ports).setConstant((s.alpha + 1.0) * y);
      CHECK(z.dot(Pi * z) < 0.0);
    }
  }
}

TEST_CASE("element blocks are affine in the multiplier variables") {
  const GraphTopology g = path_graph(5);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 5; ++i) {
    agents.push_back(AgentModel::from_transfer_function(i, {{1.0}, {1.0, i == 2 ? -1.0 : 2.0}}, g.degree(i)));
  }
  const Network net(g, agents);
  const EdgePartition part = build_partition(g, {{0, 1}, {1, 2}, {2, 3}});
  const LocalizedMatrices loc = localized_matrices(g, part, 1);
  const SectorBounds s = SectorBounds::from_angles_deg(-20.0, 35.0);
  const int ports = g.port_count();
  const AssembledBlocks free_blocks = assemble_blocks(g, part, loc, s, MultiplierVariables::free(ports, 0), ports);

  Rng rng = seeded_rng("unit/affine");
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<double> ya(ports + 1), yb(ports + 1), ym(ports + 1);
  for (auto& v : ya) v = u(rng);
  for (auto& v : yb) v = u(rng);
  for (int k = 0; k <= ports; ++k) ym[k] = 0.25 * ya[k] + 0.75 * yb[k];
  const MatrixXd fa = free_blocks.Phi_full.evaluate(ya), fb = free_blocks.Phi_full.evaluate(yb);
  CHECK((free_blocks.Phi_full.evaluate(ym) - (0.25 * fa + 0.75 * fb)).cwiseAbs().maxCoeff() < 1e-12);

  // fixed lambda equals free lambda evaluated at the same values
  const VectorXd lam = Eigen::Map<const VectorXd>(ya.data(), ports);
  const AssembledBlocks fixed_blocks = assemble_blocks(g, part, loc, s, MultiplierVariables::fixed(lam), 0);
  const std::vector<double> eps{ya[ports]};
  CHECK((fixed_blocks.Phi_full.evaluate(eps) - fa).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fa - fa.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("monolithic multiplier blocks") {
  const GraphTopology g = path_graph(3);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 3; ++i) agents.push_back(AgentModel::from_transfer_function(i, {{1.0}, {1.0, 1.0 - i}}, g.degree(i)));
  const Network net(g, agents);
  const SectorBounds s(0.5, -0.25);
  const VectorXd lam = VectorXd::LinSpaced(g.port_count(), 0.5, 1.5);
  const PsiEvaluator psi(g, net.factors, s, lam);
  const auto b = psi.at(0.7);
  CHECK((b.psi1 - b.psi1.adjoint()).norm() < 1e-12);
  CHECK((b.psi3.real() - MatrixXd(-2.0 * lam.asDiagonal())).norm() < 1e-15);
  // J = D - T N
  const SubsystemMatrices S = build_subsystem_matrices(g);
  CHECK((psi.J(0.7) - (psi.D(0.7) - S.T.cast<std::complex<double>>() * psi.N(0.7))).norm() < 1e-15);
}
