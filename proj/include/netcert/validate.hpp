#pragma once

// Independent oracles: structural identities of the sub-system graph,
// localized-vs-embedded equivalence of the element quadratic forms, and a
// sampled static-gain falsifier for certified sweep points.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "netcert/certify.hpp"
#include "netcert/graph.hpp"
#include "netcert/model.hpp"

namespace netcert {

struct SweepResult;

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct CheckReport {
  std::vector<CheckResult> checks;
  int trials = 0;

  bool passed() const;
  void add(std::string name, double deviation, double tolerance);
  void merge(const CheckReport& other);
  const CheckResult* find(std::string_view name) const;
};

using Rng = std::mt19937_64;

/// FNV-1a, used to derive reproducible seeds from labels.
std::uint64_t fnv1a(std::string_view text);
Rng seeded_rng(std::string_view label);

/// Connected simple graph: random spanning tree plus extra edges.
GraphTopology random_connected_graph(Rng& rng, int n, double extra_edge_probability = 0.3);

/// Neighbourhood sets E_i, some merged along shared edges; always admissible.
std::vector<std::vector<int>> random_admissible_partition(Rng& rng, const GraphTopology& topology);

/// Random strictly proper SISO agents of order 1 or 2 (broadcast to every
/// port); with unstable_fraction > 0 some get an unstable pole.
std::vector<AgentModel> random_agents(Rng& rng, const GraphTopology& topology, double unstable_fraction = 0.0);

/// Random block-diagonal matrix, one m_i x m_i block per agent.
Eigen::MatrixXd random_block_diagonal(Rng& rng, const GraphTopology& topology);

/// Sub-system graph identities, weight partitions of unity and Omega
/// conjugation, with `trials` random block-diagonal Phi. Includes a dense-Phi
/// negative control that must be detected.
CheckReport partition_identity_suite(const GraphTopology& topology, const EdgePartition& partition, int trials, Rng& rng);

/// Quadratic forms of the localized element condition vs its embedding in
/// R^{2m} through Omega_p, and vs the KYP block assembled for the SDP, at
/// `trials` random frequencies and vectors. Relative tolerance 1e-10.
CheckReport embedding_equivalence(const Network& network, const EdgePartition& partition, int p,
                                  const SectorBounds& sector, const Eigen::VectorXd& lambda, int trials, Rng& rng);

/// Sums of the embedded element terms reproduce the monolithic multiplier blocks.
CheckReport aggregation_identities(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                                   const Eigen::VectorXd& lambda, int trials, Rng& rng);

struct FalsificationPoint {
  double theta1 = 0.0;
  double theta2 = 0.0;
  bool certified = false;
  int samples = 0;
  int unstable = 0;
  int skipped = 0;
  double worst_abscissa = 0.0;
};

struct FalsificationReport {
  std::vector<FalsificationPoint> points;
  /// Certified points with at least one unstable sample.
  int violations = 0;
  /// Uncertified points whose samples were all stable.
  int conservative = 0;
  int skipped = 0;
};

/// Link gains 1 + delta with delta in [beta, alpha]: four corner assignments then uniform draws.
std::vector<Eigen::VectorXd> sample_link_gains(const SectorBounds& sector, int ports, int samples, Rng& rng);

FalsificationReport falsify(const Network& network, const std::string& label, const SweepResult& sweep,
                            int samples_per_point);

}  // namespace netcert
