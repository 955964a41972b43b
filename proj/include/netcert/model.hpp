#pragma once

// JSON model files: graph, agent dynamics, named partitions, sector grid,
// modes and solver options. Vertex and edge ids are 1-based in the file and
// 0-based everywhere else.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "netcert/certify.hpp"
#include "netcert/graph.hpp"
#include "netcert/lti.hpp"
#include "netcert/multiplier.hpp"

namespace netcert {

struct GridAxis {
  double min = -89.0;
  double max = 89.0;
  int steps = 61;

  /// Evenly spaced, endpoints included.
  std::vector<double> values() const;
};

struct NamedPartition {
  std::string name;
  std::vector<std::vector<int>> sets;
};

struct ModelFile {
  std::string name;
  int n = 0;
  EdgeList edges;
  std::vector<AgentModel> agents;
  std::vector<NamedPartition> partitions;
  GridAxis theta1;
  GridAxis theta2;
  std::vector<MultiplierMode> modes{MultiplierMode::Free, MultiplierMode::Fixed};
  CertifyOptions certify;
  FactorizationOptions factorization;
  int falsification_samples = 200;

  GraphTopology topology() const { return GraphTopology(n, edges); }
  Network network() const { return Network(topology(), agents, factorization); }
  const NamedPartition& partition(std::string_view name) const;
};

/// Throws ModelError with a "line:column" or JSON-pointer location.
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::filesystem::path& path);

std::string_view to_string(MultiplierMode mode);
MultiplierMode parse_mode(std::string_view text);

}  // namespace netcert
