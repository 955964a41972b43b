#include "netcert/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace netcert {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i] + 1;
  return out.str();
}

}  // namespace

Rational Rational::reciprocal(std::int64_t count) {
  if (count <= 0) return Rational{0, 1};
  return Rational{1, count};
}

Rational operator+(Rational a, Rational b) {
  std::int64_t num = a.num * b.den + b.num * a.den;
  std::int64_t den = a.den * b.den;
  std::int64_t g = std::gcd(num, den);
  if (g == 0) return Rational{0, 1};
  return Rational{num / g, den / g};
}

Rational operator*(Rational a, std::int64_t k) {
  std::int64_t num = a.num * k;
  std::int64_t g = std::gcd(num, a.den);
  if (g == 0) return Rational{0, 1};
  return Rational{num / g, a.den / g};
}

GraphTopology::GraphTopology(int n, const EdgeList& edges) : n_(n) {
  if (n < 2) throw TopologyError("graph needs at least two vertices, got " + std::to_string(n));
  neighbours_.resize(n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw TopologyError("edge {" + std::to_string(a + 1) + "," + std::to_string(b + 1) +
                          "} references a vertex outside [1," + std::to_string(n) + "]");
    }
    if (a == b) throw TopologyError("self-loop at vertex " + std::to_string(a + 1));
    auto key = std::minmax(a, b);
    if (edge_ids_.contains(key)) {
      throw TopologyError("duplicate edge {" + std::to_string(key.first + 1) + "," +
                          std::to_string(key.second + 1) + "}");
    }
    edge_ids_.emplace(key, static_cast<int>(edges_.size()));
    edges_.emplace_back(key.first, key.second);
    neighbours_[a].push_back(b);
    neighbours_[b].push_back(a);
  }

  DisjointSets components(n);
  for (const auto& [a, b] : edges_) components.unite(a, b);
  for (int i = 1; i < n; ++i) {
    if (components.find(i) != components.find(0)) {
      throw TopologyError("graph is not connected: vertex " + std::to_string(i + 1) +
                          " is unreachable from vertex 1");
    }
  }

  offsets_.resize(n);
  incident_.resize(n);
  int offset = 0;
  for (int i = 0; i < n; ++i) {
    auto& nb = neighbours_[i];
    std::sort(nb.begin(), nb.end());
    offsets_[i] = offset;
    for (int j : nb) {
      incident_[i].push_back(edge_ids_.at(std::minmax(i, j)));
      port_owner_.push_back(i);
    }
    offset += static_cast<int>(nb.size());
  }
}

int GraphTopology::local_index(int i, int j) const {
  const auto& nb = neighbours_.at(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) {
    throw TopologyError("vertex " + std::to_string(j + 1) + " is not a neighbour of " + std::to_string(i + 1));
  }
  return static_cast<int>(it - nb.begin());
}

int GraphTopology::edge_id(int i, int j) const {
  auto it = edge_ids_.find(std::minmax(i, j));
  if (it == edge_ids_.end()) {
    throw TopologyError("no edge {" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "}");
  }
  return it->second;
}

bool GraphTopology::adjacent(int i, int j) const { return edge_ids_.contains(std::minmax(i, j)); }

std::vector<int> GraphTopology::adjacent_edges(int k) const {
  auto [i, j] = edge(k);
  std::set<int> out(incident_[i].begin(), incident_[i].end());
  out.insert(incident_[j].begin(), incident_[j].end());
  out.erase(k);
  return {out.begin(), out.end()};
}

GraphTopology path_graph(int n) {
  EdgeList edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return GraphTopology(n, edges);
}

Eigen::MatrixXd SubsystemMatrices::edge_laplacian(int k) const { return B.col(k) * B.col(k).transpose(); }

SubsystemMatrices build_subsystem_matrices(const GraphTopology& topology) {
  const int n = topology.vertex_count();
  const int m = topology.edge_count();
  const int ports = 2 * m;
  SubsystemMatrices out;
  out.P = Eigen::MatrixXd::Zero(ports, ports);
  out.B = Eigen::MatrixXd::Zero(ports, m);
  out.T = Eigen::MatrixXd::Zero(ports, n);

  for (int i = 0; i < n; ++i) {
    for (int j : topology.neighbours(i)) out.P(topology.port(i, j), topology.port(j, i)) = 1.0;
    for (int k = 0; k < topology.degree(i); ++k) out.T(topology.offset(i) + k, i) = 1.0;
  }
  for (int k = 0; k < m; ++k) {
    auto [i, j] = topology.edge(k);
    out.B(topology.port(i, j), k) = 1.0;
    out.B(topology.port(j, i), k) = -1.0;
  }
  out.L = out.B * out.B.transpose();
  return out;
}

const std::vector<int>& EdgePartition::shared_elements(int k, int l) const {
  auto it = shared_.find({k, l});
  if (it == shared_.end()) {
    throw std::out_of_range("edge " + std::to_string(l + 1) + " is not adjacent to edge " + std::to_string(k + 1));
  }
  return it->second;
}

bool EdgePartition::contains_edge(int p, int k) const {
  const auto& e = edges_.at(p);
  return std::binary_search(e.begin(), e.end(), k);
}

Rational EdgePartition::theta(int k, int l) const {
  return Rational::reciprocal(static_cast<std::int64_t>(shared_elements(k, l).size()));
}

EdgePartition analyze_partition(const GraphTopology& topology, const std::vector<std::vector<int>>& sets) {
  const int n = topology.vertex_count();
  const int m = topology.edge_count();
  const int c = static_cast<int>(sets.size());
  EdgePartition part;
  part.edges_.resize(c);
  part.vertices_.resize(c);
  part.vertex_elements_.resize(n);
  part.edge_elements_.resize(m);
  part.adjacent_.resize(m);

  auto report = [&](PartitionError::Kind kind, int p, int k, std::vector<int> uncovered, std::string msg) {
    part.issues_.push_back(PartitionIssue{kind, p, k, std::move(uncovered), std::move(msg)});
  };

  if (c == 0) report(PartitionError::Kind::NotCovering, -1, -1, {}, "partition has no elements");

  for (int p = 0; p < c; ++p) {
    std::set<int> ids;
    for (int k : sets[p]) {
      if (k < 0 || k >= m) {
        report(PartitionError::Kind::BadEdgeId, p, k, {},
               "element " + std::to_string(p + 1) + " references edge id " + std::to_string(k + 1) +
                   " outside [1," + std::to_string(m) + "]");
        continue;
      }
      ids.insert(k);
    }
    if (sets[p].empty()) {
      report(PartitionError::Kind::EmptyElement, p, -1, {}, "element " + std::to_string(p + 1) + " is empty");
    }
    part.edges_[p].assign(ids.begin(), ids.end());

    std::set<int> verts;
    for (int k : part.edges_[p]) {
      auto [a, b] = topology.edge(k);
      verts.insert(a);
      verts.insert(b);
    }
    part.vertices_[p].assign(verts.begin(), verts.end());

    if (!part.edges_[p].empty()) {
      DisjointSets comp(n);
      for (int k : part.edges_[p]) {
        auto [a, b] = topology.edge(k);
        comp.unite(a, b);
      }
      int root = comp.find(part.vertices_[p].front());
      for (int v : part.vertices_[p]) {
        if (comp.find(v) != root) {
          report(PartitionError::Kind::NotConnected, p, -1, {},
                 "element " + std::to_string(p + 1) + " does not induce a connected sub-graph");
          break;
        }
      }
    }
    for (int v : part.vertices_[p]) part.vertex_elements_[v].push_back(p);
    for (int k : part.edges_[p]) part.edge_elements_[k].push_back(p);
  }

  std::vector<int> missing;
  for (int k = 0; k < m; ++k) {
    if (part.edge_elements_[k].empty()) missing.push_back(k);
  }
  if (!missing.empty()) {
    report(PartitionError::Kind::NotCovering, -1, missing.front(), missing,
           "edges {" + join_ids(missing) + "} are not covered by any element");
  }

  for (int k = 0; k < m; ++k) {
    part.adjacent_[k] = topology.adjacent_edges(k);
    std::vector<int> uncovered;
    for (int l : part.adjacent_[k]) {
      std::vector<int> both;
      for (int p : part.edge_elements_[k]) {
        if (part.contains_edge(p, l)) both.push_back(p);
      }
      if (both.empty()) uncovered.push_back(l);
      part.shared_.emplace(std::make_pair(k, l), std::move(both));
    }
    if (!uncovered.empty() && !part.edge_elements_[k].empty()) {
      report(PartitionError::Kind::Assumption2Violated, -1, k, uncovered,
             "adjacent edges {" + join_ids(uncovered) + "} of edge " + std::to_string(k + 1) +
                 " are not covered by the elements containing it");
    }
  }

  part.vertex_weight_.resize(n);
  for (int i = 0; i < n; ++i) {
    part.vertex_weight_[i] = Rational::reciprocal(static_cast<std::int64_t>(part.vertex_elements_[i].size()));
  }
  part.edge_weight_.resize(m);
  for (int k = 0; k < m; ++k) {
    part.edge_weight_[k] = Rational::reciprocal(static_cast<std::int64_t>(part.edge_elements_[k].size()));
  }
  return part;
}

EdgePartition build_partition(const GraphTopology& topology, const std::vector<std::vector<int>>& sets) {
  EdgePartition part = analyze_partition(topology, sets);
  if (!part.admissible()) {
    const auto& first = part.issues().front();
    throw PartitionError(first.kind, first.element, first.edge, first.uncovered, first.message);
  }
  return part;
}

int LocalizedMatrices::position_of_edge(int k) const {
  auto it = std::find(edges.begin(), edges.end(), k);
  if (it == edges.end()) throw std::out_of_range("edge " + std::to_string(k + 1) + " is not in this element");
  return static_cast<int>(it - edges.begin());
}

LocalizedMatrices localized_matrices(const GraphTopology& topology, const EdgePartition& partition, int p) {
  if (p < 0 || p >= partition.size()) {
    throw std::out_of_range("partition element " + std::to_string(p + 1) + " out of range");
  }
  const int ports_total = topology.port_count();
  LocalizedMatrices loc;
  loc.element = p;
  loc.vertices = partition.vertices(p);
  loc.edges = partition.edges(p);

  std::vector<int> local_row(ports_total, -1);
  for (int i : loc.vertices) {
    for (int k = 0; k < topology.degree(i); ++k) {
      local_row[topology.offset(i) + k] = static_cast<int>(loc.ports.size());
      loc.ports.push_back(topology.offset(i) + k);
    }
  }
  loc.m_hat = static_cast<int>(loc.ports.size());

  loc.T_hat = Eigen::MatrixXd::Zero(loc.m_hat, static_cast<Eigen::Index>(loc.vertices.size()));
  for (std::size_t col = 0; col < loc.vertices.size(); ++col) {
    int i = loc.vertices[col];
    for (int k = 0; k < topology.degree(i); ++k) loc.T_hat(local_row[topology.offset(i) + k], col) = 1.0;
  }

  loc.L_hat_sum = Eigen::MatrixXd::Zero(loc.m_hat, loc.m_hat);
  for (int k : loc.edges) {
    auto [i, j] = topology.edge(k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(loc.m_hat);
    b(local_row[topology.port(i, j)]) = 1.0;
    b(local_row[topology.port(j, i)]) = -1.0;
    loc.L_hat.push_back(b * b.transpose());
    loc.L_hat_sum += loc.L_hat.back();
    loc.B_hat.push_back(std::move(b));
  }

  loc.Omega = Eigen::MatrixXd::Zero(ports_total, ports_total);
  int row = 0;
  for (int r : loc.ports) loc.Omega(row++, r) = 1.0;
  for (int r = 0; r < ports_total; ++r) {
    if (local_row[r] < 0) loc.Omega(row++, r) = 1.0;
  }
  return loc;
}

}  // namespace netcert
