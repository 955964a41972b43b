#include <catch_amalgamated.hpp>

#include <sstream>

#include "json.hpp"
#include "netcert/sweep.hpp"

using namespace netcert;
using json = nlohmann::json;

namespace {

ModelFile small_model() {
  ModelFile m = load_model(NETCERT_MODELS_DIR "/path12.json");
  m.partitions.erase(m.partitions.begin() + 2, m.partitions.end());
  m.partitions.push_back({"broken", {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9, 10}}});
  m.theta1 = {-16.0, 16.0, 3};
  m.theta2 = {-16.0, 16.0, 3};
  return m;
}

std::string csv(const SweepResult& r, bool timing) {
  std::ostringstream out;
  write_csv(r, out, timing);
  return out.str();
}

}  // namespace

TEST_CASE("sweep on a small grid") {
  static const ModelFile model = small_model();
  static const Network network = model.network();
  static const SweepResult r = run_sweep(model, network, {});

  REQUIRE(r.partitions.size() == 3);
  CHECK_FALSE(r.partitions[2].admissible);
  CHECK_FALSE(r.partitions[2].issues.empty());
  REQUIRE(r.points.size() == 2 * 2 * 9);

  SECTION("ordering and verdict classes") {
    CHECK(r.points[0].partition == "P1");
    CHECK(r.points[0].mode == MultiplierMode::Free);
    CHECK(r.points[1].theta2 == 0.0);
    CHECK(r.points[3].theta1 == 0.0);
    CHECK(r.points[9].mode == MultiplierMode::Fixed);
    CHECK(r.points[18].partition == "P2");
    for (const auto& pt : r.points) {
      if (pt.theta1 > pt.theta2 || pt.theta1 > 0.0 || pt.theta2 < 0.0) {
        CHECK(pt.verdict == Verdict::NotEvaluated);
      } else {
        CHECK(pt.verdict != Verdict::NotEvaluated);
      }
    }
    CHECK(r.find("P1", MultiplierMode::Free, 0.0, 0.0)->verdict == Verdict::Feasible);
    CHECK(r.certified("P1", MultiplierMode::Free) >= r.certified("P1", MultiplierMode::Fixed));
  }

  SECTION("csv format") {
    const std::string text = csv(r, true);
    CHECK(csv(r, false).find("\nP1,free,-16,-16,not-evaluated,,0\n") != std::string::npos);
    CHECK(text.rfind("partition,mode,theta1_deg,theta2_deg,verdict,margin,seconds\n", 0) == 0);
    CHECK(text.find("\nP1,free,-16,-16,not-evaluated,,0.000\n") != std::string::npos);
    CHECK(text.find("\nP1,free,0,0,feasible,") != std::string::npos);
    int lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == 1 + 36);
  }

  SECTION("threads do not change the result") {
    SweepOptions opt;
    opt.jobs = 3;
    CHECK(csv(run_sweep(model, network, opt), false) == csv(r, false));
  }

  SECTION("summary") {
    std::ostringstream out;
    write_summary(r, out);
    const json doc = json::parse(out.str());
    CHECK(doc["nominal"]["stable"] == true);
    CHECK(doc["nominal"]["spectral_abscissa"].get<double>() < 0.0);
    CHECK(doc["partitions"][0]["elements"][0]["n_tilde"] == 194);
    CHECK(doc["partitions"][0]["elements"][0]["m_tilde"] == 40);
    CHECK(doc["partitions"][1]["certified_points"]["free"] == r.certified("P2", MultiplierMode::Free));
    CHECK(doc["partitions"][2]["admissible"] == false);
    CHECK(doc["partitions"][2]["issues"][0]["edge"] == 5);
  }

  SECTION("files") {
    const auto dir = std::filesystem::temp_directory_path() / "netcert_sweep_test";
    std::filesystem::remove_all(dir);
    emit_outputs(r, dir, {false, true});
    CHECK(std::filesystem::exists(dir / "region.csv"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "boundary.dat"));
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("partition filter and grid override") {
  const ModelFile model = small_model();
  SweepOptions opt;
  opt.partitions = {"P2"};
  opt.theta1 = GridAxis{0.0, 0.0, 1};
  opt.theta2 = GridAxis{0.0, 0.0, 1};
  opt.modes = std::vector<MultiplierMode>{MultiplierMode::Free};
  const SweepResult r = run_sweep(model, model.network(), opt);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].partition == "P2");
  CHECK(r.points[0].verdict == Verdict::Feasible);
}

TEST_CASE("boundary of a synthetic region") {
  SweepResult r;
  r.theta1 = {0.0, 1.0, 2.0};
  r.theta2 = {0.0, 1.0, 2.0};
  r.modes = {MultiplierMode::Free};
  PartitionReport rep;
  rep.name = "A";
  rep.admissible = true;
  r.partitions.push_back(rep);
  for (double a : r.theta1) {
    for (double b : r.theta2) {
      SweepPoint pt;
      pt.partition = "A";
      pt.theta1 = a;
      pt.theta2 = b;
      pt.verdict = Verdict::Feasible;
      r.points.push_back(pt);
    }
  }
  std::ostringstream out;
  write_boundary(r, out);
  const std::string text = out.str();
  CHECK(text.find("# A free") == 0);
  CHECK(text.find("\n1 1\n") == std::string::npos);
  CHECK(text.find("\n0 0\n") != std::string::npos);
  CHECK(text.find("\n2 1\n") != std::string::npos);
}

TEST_CASE("missing backend aborts the sweep") {
  ModelFile model = small_model();
  model.certify.backend = "none";
  SweepOptions opt;
  opt.jobs = 2;
  CHECK_THROWS_AS(run_sweep(model, model.network(), opt), BackendMissing);
}
