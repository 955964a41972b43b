#include <catch_amalgamated.hpp>

#include <cmath>

#include "netcert/sweep.hpp"
#include "netcert/validate.hpp"

using namespace netcert;
using Catch::Matchers::WithinAbs;

TEST_CASE("FNV-1a test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  Rng a = seeded_rng("x"), b = seeded_rng("x"), c = seeded_rng("y");
  CHECK(a() == b());
  CHECK(a() != c());
}

TEST_CASE("random generators") {
  Rng rng = seeded_rng("unit/generators");
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 9;
    const GraphTopology g = random_connected_graph(rng, n);
    CHECK(g.vertex_count() == n);
    CHECK(g.edge_count() >= n - 1);
    CHECK(analyze_partition(g, random_admissible_partition(rng, g)).admissible());
    const auto agents = random_agents(rng, g);
    for (int i = 0; i < n; ++i) {
      CHECK(agents[i].H.inputs() == g.degree(i));
      CHECK(spectral_abscissa(agents[i].H.A()) < 0.0);
    }
    const Eigen::MatrixXd phi = random_block_diagonal(rng, g);
    for (int r = 0; r < g.port_count(); ++r) {
      for (int c = 0; c < g.port_count(); ++c) {
        if (g.port_owner(r) != g.port_owner(c)) CHECK(phi(r, c) == 0.0);
      }
    }
  }
}

TEST_CASE("link gain samples") {
  Rng rng = seeded_rng("unit/gains");
  const SectorBounds s(0.5, -0.25);
  const auto gains = sample_link_gains(s, 4, 50, rng);
  REQUIRE(gains.size() == 50);
  CHECK(gains[0] == Eigen::VectorXd::Constant(4, 0.75));
  CHECK(gains[1] == Eigen::VectorXd::Constant(4, 1.5));
  CHECK(gains[2] == Eigen::Vector4d(0.75, 1.5, 0.75, 1.5));
  CHECK(gains[3] == Eigen::Vector4d(1.5, 0.75, 1.5, 0.75));
  for (const auto& g : gains) {
    CHECK(g.minCoeff() >= 0.75);
    CHECK(g.maxCoeff() <= 1.5);
  }
}

TEST_CASE("embedding and aggregation on random networks with unstable agents") {
  Rng rng = seeded_rng("unit/embedding");
  for (int t = 0; t < 10; ++t) {
    const GraphTopology g = random_connected_graph(rng, 3 + t % 6);
    const EdgePartition part = build_partition(g, random_admissible_partition(rng, g));
    const Network net(g, random_agents(rng, g, 0.4));
    const SectorBounds s = SectorBounds::from_angles_deg(-25.0, 40.0);
    const Eigen::VectorXd lambda = Eigen::VectorXd::LinSpaced(g.port_count(), 0.2, 1.3);
    CheckReport rep = aggregation_identities(net, part, s, lambda, 3, rng);
    for (int p = 0; p < part.size(); ++p) rep.merge(embedding_equivalence(net, part, p, s, lambda, 3, rng));
    for (const auto& c : rep.checks) {
      INFO(c.name << " deviation " << c.max_deviation);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("falsifier against the analytic two-agent loop") {
  // 0.5/(s+1) on both ends: eigenvalues -1 +- 0.5 sqrt(g1 g2)
  const GraphTopology g = path_graph(2);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 2; ++i) agents.push_back(AgentModel::from_transfer_function(i, {{0.5}, {1.0, 1.0}}, 1));
  const Network net(g, agents);

  SweepResult sweep;
  for (double t2 : {30.0, 60.0}) {
    SweepPoint pt;
    pt.partition = "all";
    pt.theta1 = 0.0;
    pt.theta2 = t2;
    pt.verdict = Verdict::Feasible;
    sweep.points.push_back(pt);
  }
  SweepPoint skipped;
  skipped.theta1 = 10.0;
  skipped.theta2 = 5.0;
  skipped.verdict = Verdict::NotEvaluated;
  sweep.points.push_back(skipped);

  const FalsificationReport rep = falsify(net, "two", sweep, 40);
  REQUIRE(rep.points.size() == 2);
  const double a30 = 1.0 + std::tan(30.0 * std::acos(-1.0) / 180.0);
  CHECK(rep.points[0].unstable == 0);
  CHECK_THAT(rep.points[0].worst_abscissa, WithinAbs(-1.0 + 0.5 * a30, 1e-9));
  CHECK(rep.points[1].unstable > 0);
  CHECK(rep.violations == 1);
  CHECK(rep.points[0].samples == 40);
}
