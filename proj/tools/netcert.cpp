#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "netcert/certify.hpp"
#include "netcert/model.hpp"
#include "netcert/sweep.hpp"
#include "netcert/validate.hpp"

using namespace netcert;
using json = nlohmann::ordered_json;

namespace {

enum Exit { Ok = 0, Failed = 1, BadModel = 2, Unstable = 3, NoBackend = 4 };

ModelFile load(const std::string& path) {
  ModelFile model = load_model(path);
  if (const char* v = std::getenv("NETCERT_SOLVER_VERBOSE"); v && *v && std::string(v) != "0") {
    model.certify.sdp.verbose = true;
  }
  return model;
}

json check_json(const CheckReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"max_deviation", c.max_deviation}, {"tolerance", c.tolerance},
                      {"passed", c.passed}});
  }
  return {{"passed", r.passed()}, {"trials", r.trials}, {"checks", checks}};
}

int run_check(const std::string& path) {
  const ModelFile model = load(path);
  const Network network = model.network();
  std::printf("model %s: %d agents, %d edges, %d ports\n", model.name.c_str(), network.topology.vertex_count(),
              network.topology.edge_count(), network.topology.port_count());
  std::printf("nominal spectral abscissa %.6g (%s)\n", network.nominal.abscissa,
              network.nominal.stable ? "stable" : "UNSTABLE");
  bool all_ok = true;
  for (const auto& rep : report_sizes(model, network)) {
    std::printf("\npartition %s: %s\n", rep.name.c_str(), rep.admissible ? "admissible" : "NOT admissible");
    for (const auto& is : rep.issues) std::printf("  %s\n", is.message.c_str());
    all_ok = all_ok && rep.admissible;
    if (!rep.admissible) continue;
    std::printf("  %4s %6s %6s %6s %6s %6s %14s %14s\n", "p", "n_hat", "m_hat", "m~", "n~", "n~-m", "cost(fixed)",
                "cost(bound)");
    for (const auto& s : rep.sizes) {
      std::printf("  %4d %6d %6d %6d %6d %6d %14.4g %14.4g\n", s.element + 1, s.n_hat, s.m_hat, s.m_tilde, s.n_tilde,
                  s.n_reduced, s.newton_cost_fixed, s.newton_cost_bound);
    }
  }
  if (!network.nominal.stable) return Unstable;
  return all_ok ? Ok : BadModel;
}

int run_certify(const std::string& path, const std::string& name, double theta1, double theta2,
                const std::string& mode, const std::string& backend, const std::string& dump, int jobs) {
  ModelFile model = load(path);
  const Network network = model.network();
  network.require_nominal_stability();
  const EdgePartition part = build_partition(network.topology, model.partition(name).sets);
  CertifyOptions opt = model.certify;
  if (!backend.empty()) opt.backend = backend;
  if (!dump.empty()) opt.dump_path = dump;
  opt.block_jobs = jobs;
  const auto r = certify(network, part, SectorBounds::from_angles_deg(theta1, theta2), parse_mode(mode), opt);
  std::printf("verdict %s\n", std::string(to_string(r.verdict)).c_str());
  std::printf("margin %.9e\n", r.t_star);
  std::printf("status %s, %d iterations, %.3f s\n", std::string(sdp::to_string(r.status)).c_str(), r.iterations,
              r.seconds);
  if (r.lambda.size() > 0) {
    std::printf("lambda in [%.4g, %.4g]\n", r.lambda.minCoeff(), r.lambda.maxCoeff());
  }
  for (const auto& b : r.verification.blocks) {
    std::printf("element %d: max eig %.3e, frequency check %.3e\n", b.element + 1, b.max_eig, b.fdi_max_eig);
  }
  if (!r.message.empty()) std::printf("%s\n", r.message.c_str());
  if (r.numerical_warning) std::fprintf(stderr, "warning: solver result not confirmed by verification\n");
  return Ok;
}

int run_sweep_cmd(const std::string& path, const std::string& out, int jobs, bool timing, bool boundary,
                  const std::vector<std::string>& partitions, const std::string& backend) {
  ModelFile model = load(path);
  if (!backend.empty()) model.certify.backend = backend;
  const Network network = model.network();
  SweepOptions opt;
  opt.jobs = jobs;
  opt.partitions = partitions;
  const SweepResult res = run_sweep(model, network, opt);
  emit_outputs(res, out, {timing, boundary});
  for (const auto& rep : res.partitions) {
    if (!rep.admissible) {
      std::printf("%-10s not admissible\n", rep.name.c_str());
      continue;
    }
    std::printf("%-10s", rep.name.c_str());
    for (MultiplierMode m : res.modes) {
      std::printf("  %s %d", std::string(to_string(m)).c_str(), res.certified(rep.name, m));
    }
    std::printf("\n");
  }
  return Ok;
}

int run_validate(const std::string& path, int jobs, int samples, int trials, const std::string& out) {
  const ModelFile model = load(path);
  const Network network = model.network();
  network.require_nominal_stability();
  if (samples < 0) samples = model.falsification_samples;

  json doc;
  doc["model"] = model.name;
  doc["nominal"] = {{"stable", network.nominal.stable}, {"spectral_abscissa", network.nominal.abscissa}};
  bool ok = true;
  json parts = json::array();
  for (const auto& np : model.partitions) {
    const EdgePartition part = analyze_partition(network.topology, np.sets);
    json p;
    p["name"] = np.name;
    p["admissible"] = part.admissible();
    if (!part.admissible()) {
      ok = false;
      parts.push_back(p);
      continue;
    }
    Rng rng = seeded_rng("validate/" + np.name);
    CheckReport ids = partition_identity_suite(network.topology, part, trials, rng);
    CheckReport emb, agg;
    std::uniform_real_distribution<double> ang(-80.0, 80.0), lam(0.1, 1.1);
    for (int t = 0; t < trials; ++t) {
      double a = ang(rng), b = ang(rng);
      if (a > b) std::swap(a, b);
      const SectorBounds sector = SectorBounds::from_angles_deg(a, b);
      const Eigen::VectorXd lambda =
          t == 0 ? Eigen::VectorXd::Ones(network.topology.port_count())
                 : Eigen::VectorXd(Eigen::VectorXd::NullaryExpr(network.topology.port_count(), [&] { return lam(rng); }));
      for (int e = 0; e < part.size(); ++e) emb.merge(embedding_equivalence(network, part, e, sector, lambda, 2, rng));
      agg.merge(aggregation_identities(network, part, sector, lambda, 2, rng));
    }
    p["identities"] = check_json(ids);
    p["embedding"] = check_json(emb);
    p["aggregation"] = check_json(agg);
    ok = ok && ids.passed() && emb.passed() && agg.passed();
    parts.push_back(p);
  }
  doc["partitions"] = parts;

  SweepOptions sopt;
  sopt.jobs = jobs;
  const SweepResult sweep = run_sweep(model, network, sopt);
  const FalsificationReport fr = falsify(network, model.name, sweep, samples);
  int certified = 0;
  double worst = -std::numeric_limits<double>::infinity();
  json violations = json::array();
  for (const auto& fp : fr.points) {
    if (!fp.certified) continue;
    ++certified;
    worst = std::max(worst, fp.worst_abscissa);
    if (fp.unstable > 0) violations.push_back({{"theta1_deg", fp.theta1}, {"theta2_deg", fp.theta2},
                                               {"unstable_samples", fp.unstable}});
  }
  json counts = json::object();
  for (const auto& rep : sweep.partitions) {
    if (!rep.admissible) continue;
    json c = json::object();
    for (MultiplierMode m : sweep.modes) c[std::string(to_string(m))] = sweep.certified(rep.name, m);
    counts[rep.name] = c;
  }
  doc["certified_points"] = counts;
  doc["falsification"] = {{"samples_per_point", samples},
                          {"points_evaluated", fr.points.size()},
                          {"points_certified", certified},
                          {"violations", fr.violations},
                          {"violating_points", violations},
                          {"uncertified_points_without_counterexample", fr.conservative},
                          {"skipped_samples", fr.skipped},
                          {"worst_certified_abscissa", certified ? json(worst) : json(nullptr)}};
  ok = ok && fr.violations == 0;
  doc["passed"] = ok;

  const std::string text = doc.dump(2);
  if (out.empty() || out == "-") {
    std::cout << text << '\n';
  } else {
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out);
    f << text << '\n';
  }
  return ok ? Ok : Failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized robust stability certificates for networks with uncertain links"};
  app.require_subcommand(1);

  std::string model_path;
  auto* check = app.add_subcommand("check", "Report sizes, partition admissibility and nominal stability");
  check->add_option("model", model_path, "Model file")->required();

  std::string partition, mode = "free", backend, dump;
  double theta1 = 0.0, theta2 = 0.0;
  int jobs = 1;
  auto* cert = app.add_subcommand("certify", "Certify one sector point");
  cert->add_option("model", model_path, "Model file")->required();
  cert->add_option("--partition", partition, "Partition name")->required();
  cert->add_option("--theta1", theta1, "Lower sector angle, degrees")->required();
  cert->add_option("--theta2", theta2, "Upper sector angle, degrees")->required();
  cert->add_option("--mode", mode, "Multiplier mode")->check(CLI::IsMember({"free", "fixed"}));
  cert->add_option("--backend", backend, "SDP backend");
  cert->add_option("--dump", dump, "Write the SDP in plain text before solving");
  cert->add_option("--jobs", jobs, "Threads for independent FIXED-mode blocks")->check(CLI::PositiveNumber);

  std::string out;
  bool no_timing = false, no_boundary = false;
  std::vector<std::string> only;
  auto* sweep = app.add_subcommand("sweep", "Sweep the sector grid and write region.csv, summary.json, boundary.dat");
  sweep->add_option("model", model_path, "Model file")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--partition", only, "Restrict to these partitions");
  sweep->add_option("--backend", backend, "SDP backend");
  sweep->add_flag("--no-timing", no_timing, "Write 0 in the seconds column");
  sweep->add_flag("--no-boundary", no_boundary, "Skip boundary.dat");

  int samples = -1, trials = 5;
  auto* val = app.add_subcommand("validate", "Run the identity oracles, a sweep and the falsifier; JSON report");
  val->add_option("model", model_path, "Model file")->required();
  val->add_option("--jobs", jobs, "Worker threads for the sweep")->check(CLI::PositiveNumber);
  val->add_option("--samples", samples, "Falsification samples per point (default from model)");
  val->add_option("--trials", trials, "Random trials per identity check")->check(CLI::PositiveNumber);
  val->add_option("--out", out, "Report file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return run_check(model_path);
    if (*cert) return run_certify(model_path, partition, theta1, theta2, mode, backend, dump, jobs);
    if (*sweep) return run_sweep_cmd(model_path, out, jobs, !no_timing, !no_boundary, only, backend);
    if (*val) return run_validate(model_path, jobs, samples, trials, out);
  } catch (const ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return BadModel;
  } catch (const PartitionError& e) {
    std::fprintf(stderr, "partition error: %s\n", e.what());
    return BadModel;
  } catch (const TopologyError& e) {
    std::fprintf(stderr, "topology error: %s\n", e.what());
    return BadModel;
  } catch (const LtiError& e) {
    std::fprintf(stderr, "agent model error: %s\n", e.what());
    return BadModel;
  } catch (const NominalUnstable& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return Unstable;
  } catch (const BackendMissing& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return NoBackend;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return Failed;
  }
  return Ok;
}
