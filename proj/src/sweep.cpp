#include "netcert/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace netcert {

namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string angle(double v) { return format("%.6g", v); }

struct Task {
  int partition;
  MultiplierMode mode;
  double theta1, theta2;
};

}  // namespace

int SweepResult::certified(const std::string& partition, MultiplierMode mode) const {
  int count = 0;
  for (const auto& pt : points) {
    if (pt.partition == partition && pt.mode == mode && pt.verdict == Verdict::Feasible) ++count;
  }
  return count;
}

const SweepPoint* SweepResult::find(const std::string& partition, MultiplierMode mode, double theta1,
                                    double theta2) const {
  for (const auto& pt : points) {
    if (pt.partition == partition && pt.mode == mode && pt.theta1 == theta1 && pt.theta2 == theta2) return &pt;
  }
  return nullptr;
}

std::vector<PartitionReport> report_sizes(const ModelFile& model, const Network& network) {
  std::vector<PartitionReport> out;
  for (const auto& np : model.partitions) {
    PartitionReport rep;
    rep.name = np.name;
    rep.sets = np.sets;
    const EdgePartition part = analyze_partition(network.topology, np.sets);
    rep.admissible = part.admissible();
    rep.issues = part.issues();
    if (rep.admissible) rep.sizes = partition_sizes(network, part);
    out.push_back(std::move(rep));
  }
  return out;
}

SweepResult run_sweep(const ModelFile& model, const Network& network, const SweepOptions& options) {
  network.require_nominal_stability();
  SweepResult res;
  res.model = model.name;
  res.nominal = network.nominal;
  res.theta1 = options.theta1.value_or(model.theta1).values();
  res.theta2 = options.theta2.value_or(model.theta2).values();
  res.modes = options.modes.value_or(model.modes);

  std::vector<EdgePartition> parts;
  std::vector<std::string> names;
  for (auto& rep : report_sizes(model, network)) {
    const bool wanted = options.partitions.empty() ||
                        std::find(options.partitions.begin(), options.partitions.end(), rep.name) !=
                            options.partitions.end();
    if (!wanted) continue;
    if (rep.admissible) {
      parts.push_back(analyze_partition(network.topology, rep.sets));
      names.push_back(rep.name);
    }
    res.partitions.push_back(std::move(rep));
  }

  std::vector<Task> tasks;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (MultiplierMode mode : res.modes) {
      for (double t1 : res.theta1) {
        for (double t2 : res.theta2) tasks.push_back({static_cast<int>(p), mode, t1, t2});
      }
    }
  }
  res.points.resize(tasks.size());

  CertifyOptions copt = model.certify;
  copt.block_jobs = 1;
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto work = [&] {
    for (std::size_t k; (k = cursor.fetch_add(1)) < tasks.size();) {
      const Task& t = tasks[k];
      SweepPoint& pt = res.points[k];
      pt.partition = names[t.partition];
      pt.mode = t.mode;
      pt.theta1 = t.theta1;
      pt.theta2 = t.theta2;
      if (t.theta1 > t.theta2) {
        pt.verdict = Verdict::NotEvaluated;
        pt.message = "theta1 exceeds theta2";
        continue;
      }
      try {
        const auto r = certify(network, parts[t.partition], SectorBounds::from_angles_deg(t.theta1, t.theta2), t.mode,
                               copt);
        pt.verdict = r.verdict;
        pt.margin = r.t_star;
        pt.seconds = r.seconds;
        pt.message = r.message;
      } catch (const BackendMissing&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        cursor = tasks.size();
      } catch (const Error& e) {
        pt.verdict = Verdict::SolverError;
        pt.message = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);
  return res;
}

void write_csv(const SweepResult& result, std::ostream& out, bool timing) {
  out << "partition,mode,theta1_deg,theta2_deg,verdict,margin,seconds\n";
  for (const auto& pt : result.points) {
    out << pt.partition << ',' << to_string(pt.mode) << ',' << angle(pt.theta1) << ',' << angle(pt.theta2) << ','
        << to_string(pt.verdict) << ',';
    if (pt.verdict != Verdict::NotEvaluated) out << format("%.9e", pt.margin);
    out << ',' << (timing ? format("%.3f", pt.seconds) : std::string("0")) << '\n';
  }
}

void write_summary(const SweepResult& result, std::ostream& out) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["model"] = result.model;
  doc["nominal"] = {{"stable", result.nominal.stable}, {"spectral_abscissa", result.nominal.abscissa}};
  doc["grid"] = {{"theta1_deg", result.theta1}, {"theta2_deg", result.theta2}};
  json parts = json::array();
  for (const auto& rep : result.partitions) {
    json p;
    p["name"] = rep.name;
    p["admissible"] = rep.admissible;
    json issues = json::array();
    for (const auto& is : rep.issues) {
      json uncovered = json::array();
      for (int e : is.uncovered) uncovered.push_back(e + 1);
      issues.push_back({{"element", is.element + 1}, {"edge", is.edge + 1}, {"uncovered", uncovered},
                        {"message", is.message}});
    }
    p["issues"] = issues;
    json elements = json::array();
    for (const auto& s : rep.sizes) {
      json edges = json::array();
      for (int e : rep.sets[s.element]) edges.push_back(e + 1);
      elements.push_back({{"element", s.element + 1},
                          {"edges", edges},
                          {"n_hat", s.n_hat},
                          {"m_hat", s.m_hat},
                          {"m_tilde", s.m_tilde},
                          {"n_tilde", s.n_tilde},
                          {"n_reduced", s.n_reduced},
                          {"newton_cost_fixed", s.newton_cost_fixed},
                          {"newton_cost_bound", s.newton_cost_bound}});
    }
    p["elements"] = elements;
    if (rep.admissible) {
      json counts = json::object();
      for (MultiplierMode mode : result.modes) counts[std::string(to_string(mode))] = result.certified(rep.name, mode);
      p["certified_points"] = counts;
    }
    parts.push_back(p);
  }
  doc["partitions"] = parts;
  out << doc.dump(2) << '\n';
}

void write_boundary(const SweepResult& result, std::ostream& out) {
  std::map<std::tuple<std::string, MultiplierMode, double, double>, bool> feasible;
  for (const auto& pt : result.points) {
    feasible[{pt.partition, pt.mode, pt.theta1, pt.theta2}] = pt.verdict == Verdict::Feasible;
  }
  auto ok = [&](const std::string& p, MultiplierMode m, int a, int b) {
    if (a < 0 || b < 0 || a >= static_cast<int>(result.theta1.size()) || b >= static_cast<int>(result.theta2.size())) {
      return false;
    }
    auto it = feasible.find({p, m, result.theta1[a], result.theta2[b]});
    return it != feasible.end() && it->second;
  };
  bool first = true;
  for (const auto& rep : result.partitions) {
    if (!rep.admissible) continue;
    for (MultiplierMode mode : result.modes) {
      if (!first) out << "\n\n";
      first = false;
      out << "# " << rep.name << ' ' << to_string(mode) << "\n# theta1_deg theta2_deg\n";
      for (int a = 0; a < static_cast<int>(result.theta1.size()); ++a) {
        for (int b = 0; b < static_cast<int>(result.theta2.size()); ++b) {
          if (!ok(rep.name, mode, a, b)) continue;
          const bool interior = ok(rep.name, mode, a - 1, b) && ok(rep.name, mode, a + 1, b) &&
                                ok(rep.name, mode, a, b - 1) && ok(rep.name, mode, a, b + 1);
          if (!interior) out << angle(result.theta1[a]) << ' ' << angle(result.theta2[b]) << '\n';
        }
      }
    }
  }
}

void emit_outputs(const SweepResult& result, const std::filesystem::path& dir, const EmitOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("region.csv");
    write_csv(result, f, options.timing);
  }
  {
    auto f = open("summary.json");
    write_summary(result, f);
  }
  if (options.boundary) {
    auto f = open("boundary.dat");
    write_boundary(result, f);
  }
}

}  // namespace netcert
