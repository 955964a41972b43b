#include "netcert/validate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "netcert/sweep.hpp"

namespace netcert {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

namespace {

template <class M>
double max_abs(const M& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

template <class M1, class M2>
double relative(const M1& got, const M2& want) {
  return max_abs(got - want) / std::max(1.0, max_abs(want));
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

MatrixXd selector(const MatrixXd& T, int i) { return T.col(i).asDiagonal(); }

// Embedded (2m x 2m) terms of one element at one frequency.
struct Embedded {
  MatrixXd W;
  MatrixXcd X, Y, Z, K;
};

Embedded embed(const SubsystemMatrices& S, const std::vector<MatrixXd>& Lk, const EdgePartition& part, int p,
               const PsiEvaluator::Blocks& psi, const MatrixXcd& Dw) {
  const int ports = static_cast<int>(S.P.rows());
  Embedded e;
  e.W = MatrixXd::Zero(ports, ports);
  MatrixXd xi = MatrixXd::Zero(ports, ports), heta = MatrixXd::Zero(ports, ports), lsum = MatrixXd::Zero(ports, ports);
  for (int i : part.vertices(p)) {
    e.W += part.omega(i).value() * selector(S.T, i);
    xi += part.xi(i).value() * selector(S.T, i);
  }
  e.Z = MatrixXcd::Zero(ports, ports);
  for (int k : part.edges(p)) {
    lsum += Lk[k];
    heta += part.eta(k).value() * Lk[k];
    e.Z += part.zeta(k).value() * (Lk[k] * psi.psi3 * Lk[k]);
    for (int l : part.adjacent_edges(k)) {
      if (part.contains_edge(p, l)) e.Z += part.theta(k, l).value() * (Lk[k] * psi.psi3 * Lk[l]);
    }
  }
  e.K = lsum.cast<cd>() * Dw;
  e.X = xi.cast<cd>() * psi.psi1;
  e.Y = psi.psi2 * heta.cast<cd>();
  return e;
}

MatrixXcd element_form(const MatrixXcd& X, const MatrixXcd& Y, const MatrixXcd& Z, const MatrixXcd& K) {
  return X + 0.5 * Y * K + 0.5 * K.adjoint() * Y.adjoint() + 0.25 * K.adjoint() * Z * K;
}

std::string angle_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

bool CheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void CheckReport::add(std::string name, double deviation, double tolerance) {
  for (auto& c : checks) {
    if (c.name == name) {
      c.max_deviation = std::max(c.max_deviation, deviation);
      c.passed = c.max_deviation <= c.tolerance;
      return;
    }
  }
  checks.push_back({std::move(name), deviation, tolerance, deviation <= tolerance});
}

void CheckReport::merge(const CheckReport& other) {
  for (const auto& c : other.checks) add(c.name, c.max_deviation, c.tolerance);
  trials += other.trials;
}

const CheckResult* CheckReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Rng seeded_rng(std::string_view label) { return Rng(0x6e6574636572745full ^ fnv1a(label)); }

GraphTopology random_connected_graph(Rng& rng, int n, double extra_edge_probability) {
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  std::shuffle(label.begin(), label.end(), rng);
  std::set<std::pair<int, int>> seen;
  EdgeList edges;
  auto add = [&](int a, int b) {
    auto e = std::minmax(a, b);
    if (a != b && seen.insert(e).second) edges.push_back(e);
  };
  for (int v = 1; v < n; ++v) add(label[v], label[uniform_int(rng, 0, v - 1)]);
  std::bernoulli_distribution extra(extra_edge_probability);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (extra(rng)) add(a, b);
    }
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return GraphTopology(n, edges);
}

std::vector<std::vector<int>> random_admissible_partition(Rng& rng, const GraphTopology& topology) {
  std::set<std::vector<int>> unique;
  for (int i = 0; i < topology.vertex_count(); ++i) {
    std::vector<int> e = topology.incident_edges(i);
    std::sort(e.begin(), e.end());
    unique.insert(e);
  }
  std::vector<std::vector<int>> sets(unique.begin(), unique.end());
  std::shuffle(sets.begin(), sets.end(), rng);

  const int merges = uniform_int(rng, 0, static_cast<int>(sets.size()) - 1);
  for (int r = 0; r < merges && sets.size() > 1; ++r) {
    const int a = uniform_int(rng, 0, static_cast<int>(sets.size()) - 1);
    std::vector<int> partners;
    for (int b = 0; b < static_cast<int>(sets.size()); ++b) {
      if (b == a) continue;
      std::vector<int> common;
      std::set_intersection(sets[a].begin(), sets[a].end(), sets[b].begin(), sets[b].end(),
                            std::back_inserter(common));
      if (!common.empty()) partners.push_back(b);
    }
    if (partners.empty()) continue;
    const int b = partners[uniform_int(rng, 0, static_cast<int>(partners.size()) - 1)];
    std::vector<int> merged;
    std::set_union(sets[a].begin(), sets[a].end(), sets[b].begin(), sets[b].end(), std::back_inserter(merged));
    sets[a] = std::move(merged);
    sets.erase(sets.begin() + b);
    std::set<std::vector<int>> dedup(sets.begin(), sets.end());
    sets.assign(dedup.begin(), dedup.end());
  }
  return sets;
}

std::vector<AgentModel> random_agents(Rng& rng, const GraphTopology& topology, double unstable_fraction) {
  std::bernoulli_distribution unstable(unstable_fraction);
  std::vector<AgentModel> agents;
  for (int i = 0; i < topology.vertex_count(); ++i) {
    const double sign = unstable(rng) ? -1.0 : 1.0;
    const double k = uniform(rng, 0.2, 3.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
    TransferFunction g;
    if (uniform(rng, 0.0, 1.0) < 0.5) {
      g = {{k}, {1.0, sign * uniform(rng, 0.5, 10.0)}};
    } else {
      g = {{k}, {1.0, sign * uniform(rng, 0.3, 3.0), uniform(rng, 0.5, 10.0)}};
    }
    agents.push_back(AgentModel::from_transfer_function(i, g, topology.degree(i)));
  }
  return agents;
}

MatrixXd random_block_diagonal(Rng& rng, const GraphTopology& topology) {
  std::normal_distribution<double> normal;
  const int ports = topology.port_count();
  MatrixXd phi = MatrixXd::Zero(ports, ports);
  for (int i = 0; i < topology.vertex_count(); ++i) {
    const int off = topology.offset(i), mi = topology.degree(i);
    for (int a = 0; a < mi; ++a) {
      for (int b = 0; b < mi; ++b) phi(off + a, off + b) = normal(rng);
    }
  }
  return phi;
}

CheckReport partition_identity_suite(const GraphTopology& topology, const EdgePartition& partition, int trials, Rng& rng) {
  CheckReport rep;
  rep.trials = trials;
  const SubsystemMatrices S = build_subsystem_matrices(topology);
  const int m = topology.edge_count(), ports = topology.port_count();
  const MatrixXd I = MatrixXd::Identity(ports, ports);

  rep.add("P symmetric", max_abs(S.P - S.P.transpose()), 0.0);
  rep.add("P involution", max_abs(S.P * S.P - I), 0.0);
  rep.add("P = I - L", max_abs(S.P - (I - S.L)), 0.0);

  std::vector<MatrixXd> Lk(m);
  MatrixXd lsum = MatrixXd::Zero(ports, ports);
  for (int k = 0; k < m; ++k) {
    Lk[k] = S.B.col(k) * S.B.col(k).transpose();
    lsum += Lk[k];
  }
  rep.add("L = sum L_k", max_abs(S.L - lsum), 0.0);
  double prod = 0.0;
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      prod = std::max(prod, max_abs(Lk[k] * Lk[l] - (k == l ? MatrixXd(2.0 * Lk[k]) : MatrixXd::Zero(ports, ports))));
    }
  }
  rep.add("L_k L_l = 2 delta_kl L_k", prod, 0.0);

  for (int t = 0; t < trials; ++t) {
    const MatrixXd phi = random_block_diagonal(rng, topology);
    double far = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto& adj = partition.adjacent_edges(k);
      for (int l = 0; l < m; ++l) {
        if (l == k || std::find(adj.begin(), adj.end(), l) != adj.end()) continue;
        far = std::max(far, max_abs(Lk[k] * phi * Lk[l]));
      }
    }
    rep.add("L_k Phi L_l = 0 for non-adjacent edges", far, 1e-12);

    MatrixXd split = MatrixXd::Zero(ports, ports);
    for (int k = 0; k < m; ++k) {
      split += Lk[k] * phi * Lk[k];
      for (int l : partition.adjacent_edges(k)) split += Lk[k] * phi * Lk[l];
    }
    rep.add("L Phi L edge expansion", relative(split, MatrixXd(S.L * phi * S.L)), 1e-12);

    for (int p = 0; p < partition.size(); ++p) {
      const LocalizedMatrices loc = localized_matrices(topology, partition, p);
      const MatrixXd phi_hat = (loc.Omega * phi * loc.Omega.transpose()).topLeftCorner(loc.m_hat, loc.m_hat);
      MatrixXd local_split = MatrixXd::Zero(loc.m_hat, loc.m_hat), lhat = MatrixXd::Zero(loc.m_hat, loc.m_hat);
      for (int a = 0; a < static_cast<int>(loc.edges.size()); ++a) {
        const int k = loc.edges[a];
        lhat += loc.L_hat[a];
        local_split += loc.L_hat[a] * phi_hat * loc.L_hat[a];
        for (int l : partition.adjacent_edges(k)) {
          if (partition.contains_edge(p, l)) local_split += loc.L_hat[a] * phi_hat * loc.L_hat[loc.position_of_edge(l)];
        }
      }
      rep.add("localized L Phi L edge expansion", relative(local_split, MatrixXd(lhat * phi_hat * lhat)), 1e-12);
    }
  }

  std::normal_distribution<double> normal;
  const MatrixXd dense = MatrixXd::NullaryExpr(ports, ports, [&] { return normal(rng); });
  MatrixXd split = MatrixXd::Zero(ports, ports);
  bool has_far = false;
  for (int k = 0; k < m; ++k) {
    split += Lk[k] * dense * Lk[k];
    for (int l : partition.adjacent_edges(k)) split += Lk[k] * dense * Lk[l];
    has_far = has_far || static_cast<int>(partition.adjacent_edges(k).size()) < m - 1;
  }
  // Without a non-adjacent pair the expansion is the full double sum.
  const bool detected = !has_far || relative(split, MatrixXd(S.L * dense * S.L)) > 1e-6;
  rep.add("dense Phi breaks the edge expansion", detected ? 0.0 : 1.0, 0.0);

  const Rational one{1, 1};
  double exact = 0.0, floating = 0.0;
  auto tally = [&](const std::vector<int>& owners, Rational w) {
    Rational sum{0, 1};
    double fsum = 0.0;
    for (std::size_t q = 0; q < owners.size(); ++q) {
      sum = sum + w;
      fsum += w.value();
    }
    if (!(sum == one)) exact += 1.0;
    floating = std::max(floating, std::abs(fsum - 1.0));
  };
  for (int i = 0; i < topology.vertex_count(); ++i) tally(partition.elements_of_vertex(i), partition.omega(i));
  for (int k = 0; k < m; ++k) {
    tally(partition.elements_of_edge(k), partition.eta(k));
    for (int l : partition.adjacent_edges(k)) tally(partition.shared_elements(k, l), partition.theta(k, l));
  }
  rep.add("weights sum to one (exact)", exact, 0.0);
  rep.add("weights sum to one (floating point)", floating, 1e-14);

  for (int p = 0; p < partition.size(); ++p) {
    const LocalizedMatrices loc = localized_matrices(topology, partition, p);
    const MatrixXd& O = loc.Omega;
    rep.add("Omega orthogonal", max_abs(O * O.transpose() - I), 0.0);
    double conj = 0.0, inc = 0.0, local = 0.0;
    const int kp = static_cast<int>(loc.edges.size());
    for (int a = 0; a < kp; ++a) {
      const int k = loc.edges[a];
      MatrixXd want = MatrixXd::Zero(ports, ports);
      want.topLeftCorner(loc.m_hat, loc.m_hat) = loc.L_hat[a];
      conj = std::max(conj, max_abs(O * Lk[k] * O.transpose() - want));
      VectorXd bw = VectorXd::Zero(ports);
      bw.head(loc.m_hat) = loc.B_hat[a];
      inc = std::max(inc, max_abs(O * S.B.col(k) - bw));
      for (int b = 0; b < kp; ++b) {
        const MatrixXd expect = a == b ? MatrixXd(2.0 * loc.L_hat[a]) : MatrixXd::Zero(loc.m_hat, loc.m_hat);
        local = std::max(local, max_abs(loc.L_hat[a] * loc.L_hat[b] - expect));
      }
    }
    rep.add("Omega L_k Omega' = L_hat_k (+) 0", conj, 0.0);
    rep.add("Omega B_k = [B_hat_k; 0]", inc, 0.0);
    rep.add("L_hat_k L_hat_l = 2 delta_kl L_hat_k", local, 0.0);
  }
  return rep;
}

CheckReport embedding_equivalence(const Network& network, const EdgePartition& partition, int p,
                                  const SectorBounds& sector, const VectorXd& lambda, int trials, Rng& rng) {
  CheckReport rep;
  rep.trials = trials;
  const GraphTopology& topo = network.topology;
  const SubsystemMatrices S = build_subsystem_matrices(topo);
  const int ports = topo.port_count();
  std::vector<MatrixXd> Lk(topo.edge_count());
  for (int k = 0; k < topo.edge_count(); ++k) Lk[k] = S.edge_laplacian(k);

  const PsiEvaluator psi(topo, network.factors, sector, lambda);
  const LocalizedMatrices loc = localized_matrices(topo, partition, p);
  const int mh = loc.m_hat;
  const MatrixXcd O = loc.Omega.cast<cd>();
  const AssembledBlocks parts =
      assemble_blocks(topo, partition, loc, sector, MultiplierVariables::fixed(lambda), /*eps_id=*/0);
  const StateSpace G = stacked_realization(topo, loc.vertices, network.factors);

  // Localized weights per local port, read off the owning vertex.
  VectorXd w_hat(mh);
  for (int r = 0; r < mh; ++r) w_hat(r) = partition.omega(topo.port_owner(loc.ports[r])).value();

  std::normal_distribution<double> normal;
  for (int t = 0; t < trials; ++t) {
    const double w = std::pow(10.0, uniform(rng, -2.0, 2.0));
    const double eps = uniform(rng, 0.01, 1.0);
    const auto blocks = psi.at(w);
    const MatrixXcd Dw = psi.D(w);

    const Embedded e = embed(S, Lk, partition, p, blocks, Dw);
    const MatrixXcd F_emb = element_form(e.X + eps * e.W.cast<cd>(), e.Y, e.Z, e.K);

    const MatrixXcd psi1 = blocks.psi1(loc.ports, loc.ports);
    const MatrixXcd psi2 = blocks.psi2(loc.ports, loc.ports);
    const MatrixXcd psi3 = blocks.psi3(loc.ports, loc.ports);
    const MatrixXcd D_hat = Dw(loc.ports, loc.ports);
    MatrixXd heta = MatrixXd::Zero(mh, mh), lhat = MatrixXd::Zero(mh, mh);
    MatrixXcd Z_hat = MatrixXcd::Zero(mh, mh);
    for (int a = 0; a < static_cast<int>(loc.edges.size()); ++a) {
      const int k = loc.edges[a];
      const MatrixXd La = loc.B_hat[a] * loc.B_hat[a].transpose();
      lhat += La;
      heta += partition.eta(k).value() * La;
      Z_hat += partition.zeta(k).value() * (La * psi3 * La);
      for (int l : partition.adjacent_edges(k)) {
        if (!partition.contains_edge(p, l)) continue;
        const VectorXd& bl = loc.B_hat[loc.position_of_edge(l)];
        Z_hat += partition.theta(k, l).value() * (La * psi3 * (bl * bl.transpose()));
      }
    }
    const MatrixXcd X_hat = w_hat.cast<cd>().asDiagonal() * psi1;
    const MatrixXcd F_loc = element_form(X_hat + eps * w_hat.cast<cd>().asDiagonal().toDenseMatrix(),
                                         psi2 * heta.cast<cd>(), Z_hat, lhat.cast<cd>() * D_hat);

    MatrixXcd padded = MatrixXcd::Zero(ports, ports);
    padded.topLeftCorner(mh, mh) = F_loc;
    rep.add("Omega-conjugated embedded form = localized form (+) 0",
            relative(MatrixXcd(O * F_emb * O.adjoint()), padded), 1e-10);

    const VectorXcd z = VectorXcd::NullaryExpr(ports, [&] { return cd(normal(rng), normal(rng)); });
    const VectorXcd z_hat = (O * z).head(mh);
    const cd q_emb = z.dot(F_emb * z), q_loc = z_hat.dot(F_loc * z_hat);
    rep.add("quadratic form, embedded vs localized", std::abs(q_emb - q_loc) / std::max(1.0, std::abs(q_loc)), 1e-10);

    const double y0[] = {eps};
    const MatrixXcd Gw = G.frequency_response(w);
    const MatrixXcd F_kyp = Gw.adjoint() * parts.Phi_full.evaluate(y0).cast<cd>() * Gw;
    rep.add("KYP block frequency response = localized form", relative(F_kyp, F_loc), 1e-10);
  }
  return rep;
}

CheckReport aggregation_identities(const Network& network, const EdgePartition& partition, const SectorBounds& sector,
                                   const VectorXd& lambda, int trials, Rng& rng) {
  CheckReport rep;
  rep.trials = trials;
  const GraphTopology& topo = network.topology;
  const SubsystemMatrices S = build_subsystem_matrices(topo);
  const int ports = topo.port_count();
  std::vector<MatrixXd> Lk(topo.edge_count());
  for (int k = 0; k < topo.edge_count(); ++k) Lk[k] = S.edge_laplacian(k);
  const PsiEvaluator psi(topo, network.factors, sector, lambda);

  for (int t = 0; t < trials; ++t) {
    const double w = std::pow(10.0, uniform(rng, -2.0, 2.0));
    const auto blocks = psi.at(w);
    const MatrixXcd Dw = psi.D(w);
    const MatrixXcd K = S.L.cast<cd>() * Dw;
    MatrixXd W = MatrixXd::Zero(ports, ports);
    MatrixXcd X = MatrixXcd::Zero(ports, ports), YK = X, KZK = X;
    for (int p = 0; p < partition.size(); ++p) {
      const Embedded e = embed(S, Lk, partition, p, blocks, Dw);
      W += e.W;
      X += e.X;
      YK += 0.5 * e.Y * e.K;
      KZK += 0.25 * e.K.adjoint() * e.Z * e.K;
    }
    rep.add("sum W_p = I", relative(W, MatrixXd::Identity(ports, ports)), 1e-12);
    rep.add("sum X_p = Psi1", relative(X, blocks.psi1), 1e-10);
    rep.add("sum Y_p K_p / 2 = Psi2 K", relative(YK, MatrixXcd(blocks.psi2 * K)), 1e-10);
    rep.add("sum K_p* Z_p K_p / 4 = K* Psi3 K", relative(KZK, MatrixXcd(K.adjoint() * blocks.psi3 * K)), 1e-10);
  }
  return rep;
}

std::vector<VectorXd> sample_link_gains(const SectorBounds& sector, int ports, int samples, Rng& rng) {
  std::vector<VectorXd> out;
  const double lo = sector.beta, hi = sector.alpha;
  auto corner = [&](auto pick) {
    VectorXd g(ports);
    for (int r = 0; r < ports; ++r) g(r) = 1.0 + pick(r);
    out.push_back(g);
  };
  if (samples > 0) corner([&](int) { return lo; });
  if (samples > 1) corner([&](int) { return hi; });
  if (samples > 2) corner([&](int r) { return r % 2 == 0 ? lo : hi; });
  if (samples > 3) corner([&](int r) { return r % 2 == 0 ? hi : lo; });
  std::uniform_real_distribution<double> delta(lo, hi);
  while (static_cast<int>(out.size()) < samples) corner([&](int) { return lo == hi ? lo : delta(rng); });
  return out;
}

FalsificationReport falsify(const Network& network, const std::string& label, const SweepResult& sweep,
                            int samples_per_point) {
  std::map<std::pair<double, double>, bool> points;
  for (const auto& pt : sweep.points) {
    if (pt.verdict == Verdict::NotEvaluated) continue;
    bool& c = points[{pt.theta1, pt.theta2}];
    c = c || pt.verdict == Verdict::Feasible;
  }
  FalsificationReport rep;
  for (const auto& [key, certified] : points) {
    FalsificationPoint fp;
    fp.theta1 = key.first;
    fp.theta2 = key.second;
    fp.certified = certified;
    fp.worst_abscissa = -std::numeric_limits<double>::infinity();
    Rng rng = seeded_rng(label + "@" + angle_label(key.first) + "," + angle_label(key.second));
    const SectorBounds sector = SectorBounds::from_angles_deg(key.first, key.second);
    for (const VectorXd& g : sample_link_gains(sector, network.topology.port_count(), samples_per_point, rng)) {
      ++fp.samples;
      try {
        const double a = spectral_abscissa(network_closed_loop(network.topology, network.agents, g));
        fp.worst_abscissa = std::max(fp.worst_abscissa, a);
        if (a >= 0.0) ++fp.unstable;
      } catch (const LtiError& e) {
        if (e.kind() != LtiError::Kind::AlgebraicLoop) throw;
        ++fp.skipped;
      }
    }
    rep.skipped += fp.skipped;
    if (certified && fp.unstable > 0) ++rep.violations;
    if (!certified && fp.unstable == 0) ++rep.conservative;
    rep.points.push_back(fp);
  }
  return rep;
}

}  // namespace netcert
