// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--criterion N]... [--work DIR]

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "canon.hpp"
#include "netcert/certify.hpp"
#include "netcert/model.hpp"
#include "netcert/sweep.hpp"
#include "netcert/validate.hpp"

using namespace netcert;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::filesystem::path work;
  ModelFile model = load_model(NETCERT_MODELS_DIR "/path12.json");
  std::optional<Network> network;
  std::optional<SweepResult> sweep;

  const Network& net() {
    if (!network) network.emplace(model.network());
    return *network;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Verdict parse_verdict(const std::string& s) {
  for (Verdict v : {Verdict::Feasible, Verdict::Infeasible, Verdict::NotEvaluated, Verdict::SolverError}) {
    if (to_string(v) == s) return v;
  }
  throw Error("unknown verdict '" + s + "'");
}

// Rebuilds the verdict grid from a region.csv written by criterion 6.
std::optional<SweepResult> read_sweep_cache(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) return std::nullopt;
  SweepResult r;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 5) continue;
    SweepPoint pt;
    pt.partition = f[0];
    pt.mode = parse_mode(f[1]);
    pt.theta1 = std::stod(f[2]);
    pt.theta2 = std::stod(f[3]);
    pt.verdict = parse_verdict(f[4]);
    if (f.size() > 5 && !f[5].empty()) pt.margin = std::stod(f[5]);
    r.points.push_back(pt);
  }
  return r;
}

const SweepResult& sweep(Context& ctx) {
  if (ctx.sweep) return *ctx.sweep;
  if (auto cached = read_sweep_cache(ctx.work / "region.csv")) {
    std::printf("  (reusing %s)\n", (ctx.work / "region.csv").c_str());
    ctx.sweep = std::move(cached);
    return *ctx.sweep;
  }
  SweepOptions opt;
  opt.jobs = worker_count();
  ctx.sweep = run_sweep(ctx.model, ctx.net(), opt);
  emit_outputs(*ctx.sweep, ctx.work, {false, true});
  return *ctx.sweep;
}

Outcome criterion1(Context& ctx) {
  const std::map<std::string, std::vector<std::pair<int, int>>> table{
      {"P1", {{194, 40}}},
      {"P2", {{80, 24}, {69, 23}}},
      {"P3", {{57, 20}, {58, 21}, {57, 20}}},
      {"P4", {{46, 17}, {39, 17}, {47, 18}, {38, 16}}},
      {"P5", {{29, 13}, {30, 14}, {30, 14}, {30, 14}, {29, 13}}},
  };
  int matched = 0, total = 0;
  std::string bad;
  const auto reports = report_sizes(ctx.model, ctx.net());
  for (const auto& [name, want] : table) {
    const PartitionReport* rep = nullptr;
    for (const auto& r : reports) {
      if (r.name == name) rep = &r;
    }
    total += static_cast<int>(want.size());
    if (!rep || rep->sizes.size() != want.size()) {
      bad += " " + name + ":missing";
      continue;
    }
    for (std::size_t p = 0; p < want.size(); ++p) {
      const auto& s = rep->sizes[p];
      if (s.n_tilde == want[p].first && s.m_tilde == want[p].second) {
        ++matched;
      } else {
        bad += " " + name + "/" + std::to_string(p + 1) + "=(" + std::to_string(s.n_tilde) + "," +
               std::to_string(s.m_tilde) + ")";
      }
    }
  }
  return {matched == total, std::to_string(matched) + "/" + std::to_string(total) + " (n~, m~) pairs exact" + bad};
}

Outcome criterion2(Context&) {
  Rng rng = seeded_rng("acceptance/identities");
  CheckReport all;
  int instances = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 9;
    const GraphTopology g = random_connected_graph(rng, n);
    const EdgePartition part = analyze_partition(g, random_admissible_partition(rng, g));
    if (!part.admissible()) return {false, "generator produced an inadmissible partition"};
    all.merge(partition_identity_suite(g, part, 3, rng));
    ++instances;
  }
  std::string worst;
  for (const auto& c : all.checks) {
    if (!c.passed) worst += "; " + c.name + " deviation " + fmt("%.3g", c.max_deviation);
  }
  return {all.passed(), std::to_string(instances) + " random graphs, " + std::to_string(all.checks.size()) +
                            " identities" + worst};
}

Outcome criterion3(Context& ctx) {
  const auto grid = log_grid(1e-3, 1e3, 50);
  double bez = 0.0, fac = 0.0;
  int systems = 0;
  const Network& net = ctx.net();
  for (int i = 0; i < net.topology.vertex_count(); ++i) {
    bez = std::max(bez, bezout_residual(net.factors[i], grid));
    fac = std::max(fac, factorization_residual(net.agents[i].H, net.factors[i], grid));
    ++systems;
  }
  for (const auto& c : testing::unstable_canon()) {
    const AgentModel a = AgentModel::from_transfer_function(0, c.g, c.inputs);
    const CoprimeFactors f = coprime_factorize(a);
    if (f.trivial) return {false, c.label + " was treated as stable"};
    bez = std::max(bez, bezout_residual(f, grid));
    fac = std::max(fac, factorization_residual(a.H, f, grid));
    ++systems;
  }
  return {bez <= 1e-8 && fac <= 1e-8, std::to_string(systems) + " systems, Bezout " + fmt("%.2e", bez) +
                                          ", factorization " + fmt("%.2e", fac)};
}

Outcome criterion4(Context& ctx) {
  const double a = ctx.net().nominal.abscissa;
  const GraphTopology g = path_graph(2);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 2; ++i) agents.push_back(AgentModel::from_transfer_function(i, {{1.0}, {1.0, 1.0}}, 1));
  const Network two(g, agents);
  bool rejected = false;
  try {
    two.require_nominal_stability();
  } catch (const NominalUnstable&) {
    rejected = true;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(network_closed_loop(g, agents, Eigen::VectorXd::Ones(2)), false);
  std::vector<double> poles{es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
  std::sort(poles.begin(), poles.end());
  const bool poles_ok = std::abs(poles[0] + 2.0) < 1e-12 && std::abs(poles[1]) < 1e-12;
  return {a < 0.0 && rejected && poles_ok,
          "path12 abscissa " + fmt("%.6g", a) + "; counterexample poles {" + fmt("%.3g", poles[1]) + ", " +
              fmt("%.3g", poles[0]) + "} " + (rejected ? "rejected" : "NOT rejected")};
}

Outcome criterion5(Context& ctx) {
  std::string table;
  bool all = true;
  CertifyOptions opt = ctx.model.certify;
  opt.block_jobs = worker_count();
  for (const auto& np : ctx.model.partitions) {
    const EdgePartition part = analyze_partition(ctx.net().topology, np.sets);
    if (!part.admissible()) continue;
    for (MultiplierMode mode : ctx.model.modes) {
      const auto r = certify(ctx.net(), part, SectorBounds(0.0, 0.0), mode, opt);
      const bool ok = r.verdict == Verdict::Feasible && r.t_star >= 1e-7;
      all = all && ok;
      table += " " + np.name + "/" + std::string(to_string(mode)) + "=" + std::string(to_string(r.verdict)) + "(" +
               fmt("%.2e", r.t_star) + ")";
    }
  }
  return {all, "zero sector:" + table};
}

Outcome criterion6(Context& ctx) {
  const SweepResult& r = sweep(ctx);
  auto at = [&](const std::string& p, MultiplierMode m, double a, double b) { return r.find(p, m, a, b); };
  int fixed_escape = 0, mono_escape = 0, pairwise = 0;
  for (const auto& pt : r.points) {
    if (pt.verdict != Verdict::Feasible) continue;
    if (pt.mode == MultiplierMode::Fixed) {
      const SweepPoint* f = at(pt.partition, MultiplierMode::Free, pt.theta1, pt.theta2);
      if (!f || f->verdict != Verdict::Feasible) ++fixed_escape;
    }
    if (pt.partition != "P1" && pt.partition != "pairwise") {
      const SweepPoint* m = at("P1", pt.mode, pt.theta1, pt.theta2);
      if (!m || (m->verdict != Verdict::Feasible && !(m->verdict == Verdict::Infeasible && m->margin >= -1e-6))) {
        ++mono_escape;
      }
    }
    if (pt.partition == "pairwise") ++pairwise;
  }
  std::string counts;
  bool monotone = true;
  int prev = std::numeric_limits<int>::max();
  for (const char* p : {"P1", "P2", "P3", "P4", "P5"}) {
    const int c = r.certified(p, MultiplierMode::Free);
    monotone = monotone && c <= prev;
    prev = c;
    counts += std::string(counts.empty() ? "" : " ") + p + "=" + std::to_string(c);
  }
  std::string fixed_counts;
  for (const char* p : {"P1", "P2", "P3", "P4", "P5", "pairwise"}) {
    fixed_counts += std::string(fixed_counts.empty() ? "" : " ") + p + "=" +
                    std::to_string(r.certified(p, MultiplierMode::Fixed));
  }
  const bool pass = fixed_escape == 0 && mono_escape == 0 && pairwise == 0;
  return {pass, "(a) FIXED outside FREE: " + std::to_string(fixed_escape) + "; (b) outside P1: " +
                    std::to_string(mono_escape) + "; (c) pairwise certified: " + std::to_string(pairwise) +
                    "; (d) FREE counts " + counts + (monotone ? " non-increasing" : " NOT monotone, see notes") +
                    "; FIXED counts " + fixed_counts};
}

Outcome criterion7(Context& ctx) {
  const SweepResult& r = sweep(ctx);
  const int samples = ctx.model.falsification_samples;
  const FalsificationReport fr = falsify(ctx.net(), ctx.model.name, r, samples);
  int certified = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : fr.points) {
    if (!p.certified) continue;
    ++certified;
    worst = std::max(worst, p.worst_abscissa);
  }
  return {samples >= 200 && fr.violations == 0 && certified > 0,
          std::to_string(certified) + " certified points x " + std::to_string(samples) + " samples, " +
              std::to_string(fr.violations) + " with an unstable sample, worst abscissa " + fmt("%.4g", worst) +
              ", skipped " + std::to_string(fr.skipped) + "; " + std::to_string(fr.conservative) +
              " uncertified points had no counterexample"};
}

Outcome criterion8(Context& ctx) {
  Rng rng = seeded_rng("acceptance/embedding");
  std::uniform_real_distribution<double> ang(-80.0, 80.0), lam(0.1, 1.5);
  auto random_sector = [&] {
    double a = ang(rng), b = ang(rng);
    if (a > b) std::swap(a, b);
    return SectorBounds::from_angles_deg(a, b);
  };
  auto random_lambda = [&](int ports) { return Eigen::VectorXd(Eigen::VectorXd::NullaryExpr(ports, [&] { return lam(rng); })); };

  CheckReport shipped, random;
  int elements = 0;
  for (const auto& np : ctx.model.partitions) {
    const EdgePartition part = build_partition(ctx.net().topology, np.sets);
    for (int p = 0; p < part.size(); ++p) {
      shipped.merge(embedding_equivalence(ctx.net(), part, p, random_sector(),
                                          random_lambda(ctx.net().topology.port_count()), 5, rng));
      ++elements;
    }
  }
  for (int t = 0; t < 100; ++t) {
    const GraphTopology g = random_connected_graph(rng, 2 + t % 9);
    const EdgePartition part = build_partition(g, random_admissible_partition(rng, g));
    const Network net(g, random_agents(rng, g, 0.3));
    for (int p = 0; p < part.size(); ++p) {
      random.merge(embedding_equivalence(net, part, p, random_sector(), random_lambda(g.port_count()), 2, rng));
    }
  }
  double worst = 0.0;
  for (const auto* rep : {&shipped, &random}) {
    for (const auto& c : rep->checks) worst = std::max(worst, c.max_deviation);
  }
  return {shipped.passed() && random.passed(), std::to_string(elements) + " shipped elements + 100 random instances, "
                                                   "max relative deviation " + fmt("%.2e", worst)};
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  std::string work = "acceptance_work";
  app.add_option("--criterion", selected, "Criterion number (repeatable; all when omitted)")
      ->check(CLI::Range(1, 8));
  app.add_option("--work", work, "Directory for the sweep outputs shared by criteria 6 and 7");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"element size regression", 1.0, criterion1},
      {"algebraic identity suite", 30.0, criterion2},
      {"coprime factorization residuals", 10.0, criterion3},
      {"nominal stability gate", 60.0, criterion4},
      {"zero-sector smoke test", 60.0, criterion5},
      {"region properties on the 21x21 grid", 1800.0, criterion6},
      {"falsification at certified points", 600.0, criterion7},
      {"localized vs embedded quadratic forms", 600.0, criterion8},
  };
  if (selected.empty()) {
    for (int c = 1; c <= 8; ++c) selected.push_back(c);
  }

  Context ctx;
  ctx.work = work;
  if (std::find(selected.begin(), selected.end(), 6) != selected.end()) std::filesystem::remove(ctx.work / "region.csv");

  int failed = 0;
  for (int c : selected) {
    const Criterion& cr = criteria[c - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (secs > cr.budget_seconds) {
      out.pass = false;
      out.detail += "; over the " + fmt("%.0f", cr.budget_seconds) + " s budget";
    }
    std::printf("criterion %d: %s  %s: %s [%.2f s]\n", c, out.pass ? "PASS" : "FAIL", cr.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
