#pragma once

// Network graph, the 1-regular sub-system graph objects derived from it, and
// localized edge partitions with their index sets and weights.
//
// All indices are 0-based: vertices (agents) in [0, n), edges in [0, m) in
// input order, ports in [0, 2m). Port r belongs to agent i when
// offset(i) <= r < offset(i) + degree(i); the port of agent i facing
// neighbour j is offset(i) + local_index(i, j).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netcert/error.hpp"

namespace netcert {

/// Exact non-negative fraction, kept reduced.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational reciprocal(std::int64_t count);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator*(Rational a, std::int64_t k);
  friend bool operator==(const Rational&, const Rational&) = default;
};

using EdgeList = std::vector<std::pair<int, int>>;

class GraphTopology {
 public:
  /// Validates and enumerates a simple connected graph. Edges keep their input
  /// order; neighbours of each vertex are enumerated in ascending order.
  GraphTopology(int n, const EdgeList& edges);

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int port_count() const { return 2 * edge_count(); }

  /// Endpoints of edge k as (min, max).
  std::pair<int, int> edge(int k) const { return edges_.at(k); }
  const EdgeList& edges() const { return edges_; }

  const std::vector<int>& neighbours(int i) const { return neighbours_.at(i); }
  int degree(int i) const { return static_cast<int>(neighbours_.at(i).size()); }
  /// First port of agent i, i.e. the sum of the degrees of agents before i.
  int offset(int i) const { return offsets_.at(i); }
  int local_index(int i, int j) const;
  int port(int i, int j) const { return offset(i) + local_index(i, j); }
  int port_owner(int r) const { return port_owner_.at(r); }
  int edge_id(int i, int j) const;
  bool adjacent(int i, int j) const;

  /// Edge ids incident to vertex i, ordered by the neighbour enumeration.
  const std::vector<int>& incident_edges(int i) const { return incident_.at(i); }

  /// Edges sharing an endpoint with edge k, excluding k, ascending.
  std::vector<int> adjacent_edges(int k) const;

 private:
  int n_;
  EdgeList edges_;
  std::vector<std::vector<int>> neighbours_;
  std::vector<std::vector<int>> incident_;
  std::vector<int> offsets_;
  std::vector<int> port_owner_;
  std::map<std::pair<int, int>, int> edge_ids_;
};

GraphTopology path_graph(int n);

/// Matrices of the 1-regular sub-system graph: routing permutation P,
/// incidence B, Laplacian L = B B', replication T.
struct SubsystemMatrices {
  Eigen::MatrixXd P;
  Eigen::MatrixXd B;
  Eigen::MatrixXd L;
  Eigen::MatrixXd T;

  /// Rank-one term L_k = B(:,k) B(:,k)'.
  Eigen::MatrixXd edge_laplacian(int k) const;
};

SubsystemMatrices build_subsystem_matrices(const GraphTopology& topology);

struct PartitionIssue {
  PartitionError::Kind kind;
  int element = -1;
  int edge = -1;
  std::vector<int> uncovered;
  std::string message;
};

/// A localized edge partition together with every derived index set.
class EdgePartition {
 public:
  int size() const { return static_cast<int>(edges_.size()); }

  /// K_p, ascending edge ids of element p.
  const std::vector<int>& edges(int p) const { return edges_.at(p); }
  /// U_p, ascending vertices touched by element p.
  const std::vector<int>& vertices(int p) const { return vertices_.at(p); }
  /// J_i, elements containing vertex i.
  const std::vector<int>& elements_of_vertex(int i) const { return vertex_elements_.at(i); }
  /// O_k, elements containing edge k.
  const std::vector<int>& elements_of_edge(int k) const { return edge_elements_.at(k); }
  /// L_k, edges adjacent to edge k.
  const std::vector<int>& adjacent_edges(int k) const { return adjacent_.at(k); }
  /// Q_{k,l}, elements containing both k and l, for l in L_k.
  const std::vector<int>& shared_elements(int k, int l) const;
  bool contains_edge(int p, int k) const;

  Rational omega(int i) const { return vertex_weight_.at(i); }
  Rational xi(int i) const { return vertex_weight_.at(i); }
  Rational eta(int k) const { return edge_weight_.at(k); }
  Rational zeta(int k) const { return edge_weight_.at(k); }
  Rational theta(int k, int l) const;

  bool admissible() const { return issues_.empty(); }
  const std::vector<PartitionIssue>& issues() const { return issues_; }

 private:
  friend EdgePartition analyze_partition(const GraphTopology&, const std::vector<std::vector<int>>&);

  std::vector<std::vector<int>> edges_;
  std::vector<std::vector<int>> vertices_;
  std::vector<std::vector<int>> vertex_elements_;
  std::vector<std::vector<int>> edge_elements_;
  std::vector<std::vector<int>> adjacent_;
  std::map<std::pair<int, int>, std::vector<int>> shared_;
  std::vector<Rational> vertex_weight_;
  std::vector<Rational> edge_weight_;
  std::vector<PartitionIssue> issues_;
};

/// Derives all index sets and records admissibility problems without throwing.
EdgePartition analyze_partition(const GraphTopology& topology, const std::vector<std::vector<int>>& sets);

/// As analyze_partition, but throws PartitionError on the first problem.
EdgePartition build_partition(const GraphTopology& topology, const std::vector<std::vector<int>>& sets);

/// Per-element localized matrices. Rows follow the natural order of U_p.
struct LocalizedMatrices {
  int element = 0;
  int m_hat = 0;
  std::vector<int> vertices;
  /// Global ports of the agents in U_p, in row order.
  std::vector<int> ports;
  /// K_p; B_hat and L_hat are aligned with it.
  std::vector<int> edges;
  std::vector<Eigen::VectorXd> B_hat;
  std::vector<Eigen::MatrixXd> L_hat;
  Eigen::MatrixXd L_hat_sum;
  /// m_hat x |U_p| replication matrix of the element.
  Eigen::MatrixXd T_hat;
  /// 2m x 2m permutation with Omega B(:,k) = [B_hat_k; 0].
  Eigen::MatrixXd Omega;

  int position_of_edge(int k) const;
};

LocalizedMatrices localized_matrices(const GraphTopology& topology, const EdgePartition& partition, int p);

}  // namespace netcert
