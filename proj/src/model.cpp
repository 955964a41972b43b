#include "netcert/model.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace netcert {

using json = nlohmann::json;

namespace {

std::string location(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string join(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string join(const std::string& ptr, std::size_t k) { return ptr + "/" + std::to_string(k); }

const json& field(const json& obj, const std::string& ptr, const char* key) {
  if (!obj.is_object()) throw ModelError(ptr.empty() ? "/" : ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ModelError(ptr.empty() ? "/" : ptr, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ModelError(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ModelError(ptr, "expected a finite number");
  return x;
}

int integer(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw ModelError(ptr, "expected an integer");
  return v.get<int>();
}

std::vector<double> vector_of(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw ModelError(ptr, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], join(ptr, k)));
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& ptr, Eigen::Index rows, Eigen::Index cols) {
  if (!v.is_array()) throw ModelError(ptr, "expected an array of rows");
  if (rows >= 0 && static_cast<Eigen::Index>(v.size()) != rows) {
    throw ModelError(ptr, "expected " + std::to_string(rows) + " rows, got " + std::to_string(v.size()));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), cols < 0 ? 0 : cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = vector_of(v[r], join(ptr, r));
    if (cols < 0 && r == 0) out.resize(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != out.cols()) throw ModelError(join(ptr, r), "ragged matrix row");
    for (std::size_t c = 0; c < row.size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return out;
}

/// Edge ids given as integers or inclusive "a:b" ranges, 1-based.
std::vector<int> edge_set(const json& v, const std::string& ptr, int m) {
  std::vector<int> out;
  auto add = [&](int e, const std::string& where) {
    if (e < 1 || e > m) throw ModelError(where, "edge id " + std::to_string(e) + " outside 1.." + std::to_string(m));
    out.push_back(e - 1);
  };
  auto add_range = [&](const std::string& s, const std::string& where) {
    const auto colon = s.find(':');
    try {
      if (colon == std::string::npos) {
        add(std::stoi(s), where);
        return;
      }
      const int a = std::stoi(s.substr(0, colon)), b = std::stoi(s.substr(colon + 1));
      if (a > b) throw ModelError(where, "empty edge range '" + s + "'");
      for (int e = a; e <= b; ++e) add(e, where);
    } catch (const std::logic_error&) {
      throw ModelError(where, "malformed edge range '" + s + "'");
    }
  };
  if (v.is_string()) {
    add_range(v.get<std::string>(), ptr);
  } else if (v.is_array()) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto where = join(ptr, k);
      if (v[k].is_string()) {
        add_range(v[k].get<std::string>(), where);
      } else {
        add(integer(v[k], where), where);
      }
    }
  } else {
    throw ModelError(ptr, "expected an edge list or an \"a:b\" range");
  }
  return out;
}

GridAxis axis(const json& v, const std::string& ptr) {
  GridAxis a;
  a.min = number(field(v, ptr, "min"), join(ptr, "min"));
  a.max = number(field(v, ptr, "max"), join(ptr, "max"));
  a.steps = integer(field(v, ptr, "steps"), join(ptr, "steps"));
  if (a.steps < 1) throw ModelError(join(ptr, "steps"), "at least one step required");
  if (a.min > a.max) throw ModelError(ptr, "min exceeds max");
  if (a.min <= -90.0 || a.max >= 90.0) throw ModelError(ptr, "angles must lie strictly between -90 and 90 degrees");
  return a;
}

void parse_agents(const json& list, const std::string& ptr, const GraphTopology& topo, ModelFile& model) {
  if (!list.is_array()) throw ModelError(ptr, "expected an array of agents");
  const int n = topo.vertex_count();
  std::vector<std::optional<AgentModel>> slots(n);
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto aptr = join(ptr, k);
    const json& a = list[k];
    if (!a.is_object()) throw ModelError(aptr, "expected an object");
    std::vector<int> ids;
    if (a.contains("id")) ids.push_back(integer(a["id"], join(aptr, "id")));
    if (a.contains("ids")) {
      const auto& v = a["ids"];
      if (!v.is_array()) throw ModelError(join(aptr, "ids"), "expected an array of agent ids");
      for (std::size_t j = 0; j < v.size(); ++j) ids.push_back(integer(v[j], join(join(aptr, "ids"), j)));
    }
    if (ids.empty()) throw ModelError(aptr, "missing field 'id' or 'ids'");
    for (int id : ids) {
      if (id < 1 || id > n) throw ModelError(aptr, "agent id " + std::to_string(id) + " outside 1.." + std::to_string(n));
      if (slots[id - 1]) throw ModelError(aptr, "agent " + std::to_string(id) + " defined twice");
      const int i = id - 1;
      try {
        if (a.contains("tf")) {
          const auto tptr = join(aptr, "tf");
          TransferFunction g{vector_of(field(a["tf"], tptr, "num"), join(tptr, "num")),
                             vector_of(field(a["tf"], tptr, "den"), join(tptr, "den"))};
          slots[i] = AgentModel::from_transfer_function(i, g, topo.degree(i));
        } else if (a.contains("ss")) {
          const auto sptr = join(aptr, "ss");
          const json& s = a["ss"];
          const Eigen::MatrixXd A = matrix_of(field(s, sptr, "A"), join(sptr, "A"), -1, -1);
          const Eigen::Index nx = A.rows();
          const Eigen::MatrixXd B = matrix_of(field(s, sptr, "B"), join(sptr, "B"), nx, topo.degree(i));
          const Eigen::MatrixXd C = matrix_of(field(s, sptr, "C"), join(sptr, "C"), 1, nx);
          const Eigen::MatrixXd D = s.contains("D") ? matrix_of(s["D"], join(sptr, "D"), 1, topo.degree(i))
                                                    : Eigen::MatrixXd::Zero(1, topo.degree(i));
          slots[i] = AgentModel::from_state_space(i, StateSpace(A, B, C, D));
        } else {
          throw ModelError(aptr, "agent needs a 'tf' or an 'ss' entry");
        }
      } catch (const LtiError& e) {
        throw ModelError(aptr, e.what());
      } catch (const std::invalid_argument& e) {
        throw ModelError(aptr, e.what());
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!slots[i]) throw ModelError(ptr, "no dynamics given for agent " + std::to_string(i + 1));
    model.agents.push_back(std::move(*slots[i]));
  }
}

void parse_solver(const json& s, const std::string& ptr, CertifyOptions& opt) {
  if (!s.is_object()) throw ModelError(ptr, "expected an object");
  for (auto it = s.begin(); it != s.end(); ++it) {
    const auto& key = it.key();
    const auto where = join(ptr, key);
    if (key == "backend") {
      if (!it->is_string()) throw ModelError(where, "expected a string");
      opt.backend = it->get<std::string>();
    } else if (key == "t_accept") {
      opt.t_accept = number(*it, where);
    } else if (key == "t_cap") {
      opt.t_cap = number(*it, where);
    } else if (key == "eps_floor") {
      opt.eps_floor = number(*it, where);
    } else if (key == "lambda_floor") {
      opt.lambda_floor = number(*it, where);
    } else if (key == "tolerance") {
      opt.sdp.tolerance = number(*it, where);
    } else if (key == "max_iterations") {
      opt.sdp.max_iterations = integer(*it, where);
    } else {
      throw ModelError(where, "unknown solver option");
    }
  }
}

}  // namespace

std::vector<double> GridAxis::values() const {
  std::vector<double> out(steps);
  for (int k = 0; k < steps; ++k) out[k] = steps == 1 ? min : min + (max - min) * k / (steps - 1);
  return out;
}

const NamedPartition& ModelFile::partition(std::string_view name) const {
  for (const auto& p : partitions) {
    if (p.name == name) return p;
  }
  throw ModelError("/partitions", "no partition named '" + std::string(name) + "'");
}

std::string_view to_string(MultiplierMode mode) { return mode == MultiplierMode::Free ? "free" : "fixed"; }

MultiplierMode parse_mode(std::string_view text) {
  if (text == "free" || text == "FREE") return MultiplierMode::Free;
  if (text == "fixed" || text == "FIXED") return MultiplierMode::Fixed;
  throw std::invalid_argument("unknown multiplier mode '" + std::string(text) + "' (free or fixed)");
}

ModelFile parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError(location(text, e.byte > 0 ? e.byte - 1 : 0), "invalid JSON");
  }
  if (!doc.is_object()) throw ModelError("/", "expected an object");

  ModelFile model;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ModelError("/name", "expected a string");
    model.name = doc["name"].get<std::string>();
  }

  const json& g = field(doc, "", "graph");
  model.n = integer(field(g, "/graph", "n"), "/graph/n");
  const json& edges = field(g, "/graph", "edges");
  if (!edges.is_array()) throw ModelError("/graph/edges", "expected an array of vertex pairs");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto ptr = join("/graph/edges", k);
    if (!edges[k].is_array() || edges[k].size() != 2) throw ModelError(ptr, "expected a pair of vertex ids");
    const int a = integer(edges[k][0], join(ptr, 0)), b = integer(edges[k][1], join(ptr, 1));
    model.edges.emplace_back(a - 1, b - 1);
  }
  std::optional<GraphTopology> topo;
  try {
    topo.emplace(model.n, model.edges);
  } catch (const TopologyError& e) {
    throw ModelError("/graph", e.what());
  }

  parse_agents(field(doc, "", "agents"), "/agents", *topo, model);

  if (doc.contains("partitions")) {
    const json& parts = doc["partitions"];
    if (!parts.is_array()) throw ModelError("/partitions", "expected an array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto ptr = join("/partitions", k);
      const json& name = field(parts[k], ptr, "name");
      if (!name.is_string()) throw ModelError(join(ptr, "name"), "expected a string");
      NamedPartition p;
      p.name = name.get<std::string>();
      if (!names.insert(p.name).second) throw ModelError(join(ptr, "name"), "duplicate partition name");
      const json& sets = field(parts[k], ptr, "sets");
      if (!sets.is_array()) throw ModelError(join(ptr, "sets"), "expected an array of edge sets");
      for (std::size_t s = 0; s < sets.size(); ++s) {
        p.sets.push_back(edge_set(sets[s], join(join(ptr, "sets"), s), topo->edge_count()));
      }
      model.partitions.push_back(std::move(p));
    }
  }

  if (doc.contains("grid")) {
    const json& grid = doc["grid"];
    if (grid.contains("theta1")) model.theta1 = axis(grid["theta1"], "/grid/theta1");
    if (grid.contains("theta2")) model.theta2 = axis(grid["theta2"], "/grid/theta2");
  }

  if (doc.contains("modes")) {
    const json& modes = doc["modes"];
    if (!modes.is_array() || modes.empty()) throw ModelError("/modes", "expected a non-empty array");
    model.modes.clear();
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto ptr = join("/modes", k);
      if (!modes[k].is_string()) throw ModelError(ptr, "expected \"free\" or \"fixed\"");
      try {
        model.modes.push_back(parse_mode(modes[k].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ModelError(ptr, e.what());
      }
    }
  }

  if (doc.contains("solver")) parse_solver(doc["solver"], "/solver", model.certify);

  if (doc.contains("factorization")) {
    const json& f = doc["factorization"];
    if (f.contains("design")) {
      const auto d = f["design"].is_string() ? f["design"].get<std::string>() : "";
      if (d == "lqr") {
        model.factorization.design = FeedbackDesign::Lqr;
      } else if (d == "pole-placement") {
        model.factorization.design = FeedbackDesign::PolePlacement;
      } else {
        throw ModelError("/factorization/design", "expected \"lqr\" or \"pole-placement\"");
      }
    }
    if (f.contains("poles")) {
      const json& poles = f["poles"];
      if (!poles.is_array()) throw ModelError("/factorization/poles", "expected an array of [re, im] pairs");
      for (std::size_t k = 0; k < poles.size(); ++k) {
        const auto pr = vector_of(poles[k], join("/factorization/poles", k));
        if (pr.empty() || pr.size() > 2) throw ModelError(join("/factorization/poles", k), "expected [re] or [re, im]");
        model.factorization.poles.emplace_back(pr[0], pr.size() == 2 ? pr[1] : 0.0);
      }
    }
  }

  if (doc.contains("validation")) {
    const json& v = doc["validation"];
    if (v.contains("samples")) model.falsification_samples = integer(v["samples"], "/validation/samples");
  }
  return model;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("", "cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace netcert
