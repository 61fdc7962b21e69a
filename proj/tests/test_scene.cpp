#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

#include "curvemvg/commands.hpp"
#include "curvemvg/errors.hpp"

using namespace curvemvg;
using namespace curvemvg::scene;
using nlohmann::json;

namespace {

const std::filesystem::path kScenes = CURVEMVG_SCENES_DIR;

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "curvemvg_test_scene";
  std::filesystem::create_directories(dir);
  return dir / name;
}

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  const std::map<std::string, json> cases = {
      {"cameras[0].matrix", json::parse(R"({"cameras": [{"matrix": [[1, 0, 0, 0]]}]})")},
      {"cameras[0].matrix", json::parse(
           R"({"cameras": [{"matrix": [[1,0,0,0],[2,0,0,0],[3,0,0,0]]}]})")},
      {"cameras[0].rotation", json::parse(
           R"({"cameras": [{"intrinsics": {}, "rotation": [[2,0,0],[0,1,0],[0,0,1]],
               "translation": [0,0,1]}]})")},
      {"cameras[0].translation", json::parse(
           R"({"cameras": [{"intrinsics": {}, "rotation": [[1,0,0],[0,1,0],[0,0,1]]}]})")},
      {"curves[0].preset", json::parse(R"({"curves": [{"preset": "trefoil"}]})")},
      {"curves[1].coefficients", json::parse(
           R"({"curves": [{"preset": "conic"}, {"coefficients": [[1,0,0],[0,1,0],[0,0,0],[0,0,0]]}]})")},
      {"dynamic_points[0].trajectory", json::parse(R"({"dynamic_points": [{"trajectory": "spiral"}]})")},
      {"dynamic_points[0].times", json::parse(
           R"({"random_cameras": 2, "dynamic_points": [{"trajectory": "line", "times": [[0.1]]}]})")},
      {"noise_sigma", json::parse(R"({"noise_sigma": -1})")},
      {"seed", json::parse(R"({"seed": "abc"})")},
      {"options.n_planes", json::parse(R"({"options": {"n_planes": 0}})")},
      {"options.d_range", json::parse(R"({"options": {"d_range": [4, 2]}})")},
      {"colour", json::parse(R"({"colour": 1})")},
  };
  for (const auto& [key, doc] : cases) {
    CAPTURE(key);
    const std::string msg = config_error(doc);
    REQUIRE(!msg.empty());
    CHECK(msg.rfind(key, 0) == 0);
  }
  CHECK(config_error(json::parse(R"({"seed": 3, "random_cameras": 2,
                                    "curves": [{"preset": "conic", "seed": 1}]})")) == "");
}

TEST_CASE("parametric and matrix cameras agree") {
  const SceneConfig cfg = parse_config(json::parse(R"({
    "cameras": [
      {"intrinsics": {"focal": 2.0, "u0": 0.5}, "rotation": [[1,0,0],[0,1,0],[0,0,1]],
       "translation": [0, 0, 3]},
      {"matrix": [[2, 0, 0.5, 1.5], [0, 2, 0, 0], [0, 0, 1, 3]]}
    ]})"));
  std::mt19937_64 rng(0);
  const Scene s = realize(cfg, rng);
  REQUIRE(s.cams.size() == 2);
  CHECK((s.cams[0].matrix() - s.cams[1].matrix()).norm() <= 1e-15);
}

TEST_CASE("CSV follows RFC 4180") {
  CsvTable t{"t", {"a", "b"}, {}};
  CHECK(to_csv(t) == "a,b\r\n");
  t.add({"x,y", "say \"hi\""});
  t.add({"line\nbreak", "plain"});
  CHECK(to_csv(t) == "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n\"line\nbreak\",plain\r\n");
  CHECK_THROWS_AS(t.add({"only one"}), DimensionMismatch);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("kruppa-check on the bundled conic pair") {
  const Report r = execute("kruppa-check", load_config(kScenes / "conic_pair.json"));
  CHECK(r.passed());
  CHECK(r.metrics.at("curve0.constraint_norm") <= 1e-9);
  CHECK(r.metrics.at("curve0.classical_residual") <= 1e-9);
  CHECK(r.metrics.at("curve0.perturbed_norm") >= 1e-5);
  CHECK(r.verdicts.at("curve0.ground_truth"));
}

TEST_CASE("consistency tables match the counting formulas") {
  RunFlags flags;
  flags.d_range = parse_range("2..4", "--d");
  flags.m_range = parse_range("2..8", "--m");
  const Report r = execute("consistency-tables", SceneConfig{}, flags);
  CHECK(r.passed());
  for (int d = 2; d <= 4; ++d) {
    const std::string k = "chow.d" + std::to_string(d);
    const long long unknowns = binom(d + 5, 5) - binom(d + 3, 5);
    const long long cap = d * (d + 3) / 2;
    CHECK(r.metrics.at(k + ".unknowns") == unknowns);
    CHECK(r.metrics.at(k + ".per_view_cap") == cap);
    CHECK(r.metrics.at(k + ".ceil_bound") == (unknowns - 1 + cap - 1) / cap);
  }
  for (int m = 2; m <= 8; ++m) {
    const std::string k = "dual.m" + std::to_string(m);
    const long long unknowns = binom(m + 3, 3);
    const long long cap = binom(m + 2, 2) - 1;
    CHECK(r.metrics.at(k + ".unknowns") == unknowns);
    CHECK(r.metrics.at(k + ".per_view_cap") == cap);
    CHECK(r.metrics.at(k + ".ceil_bound") == (unknowns - 1 + cap - 1) / cap);
    CHECK(r.metrics.at(k + ".views_needed_linear") == m + 1);
  }
  CHECK(r.metrics.at("chow.d2.unknowns") == 20);
  CHECK(r.metrics.at("chow.d3.unknowns") == 50);
  CHECK(r.metrics.at("dual.m4.per_view_cap") == 14);
  CHECK_THROWS_AS(parse_range("2..x", "--d"), ConfigError);
  CHECK(parse_range("3", "--m") == std::pair{3, 3});
}

TEST_CASE("sweep export labels d true and d(d-1) extraneous points per plane") {
  const SceneConfig cfg = parse_config(json::parse(R"({
    "seed": 5, "random_cameras": 3,
    "curves": [{"preset": "twisted_cubic"}], "options": {"n_planes": 400}})"));
  const Report r = execute("reconstruct-points", cfg);
  CHECK(r.passed());
  const auto dir = scratch("sweep");
  std::filesystem::remove_all(dir);
  export_csv(r, dir);
  std::ifstream in(dir / "sweep_candidates.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("plane_index,candidate_index,x,y,z,w,component_label", 0) == 0);
  std::map<int, std::pair<int, int>> per_plane;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    REQUIRE(f.size() >= 7);
    auto& [t, e] = per_plane[std::stoi(f[0])];
    if (f[6] == "true") ++t;
    else if (f[6] == "extraneous") ++e;
    else FAIL("unexpected label " << f[6]);
  }
  CHECK(per_plane.size() >= 50);
  for (const auto& [plane, counts] : per_plane) {
    CHECK(counts.first == 3);
    CHECK(counts.second == 6);
  }
}

TEST_CASE("reports and CSV files are reproducible") {
  const SceneConfig cfg = load_config(kScenes / "dynamics.json");
  const Report a = execute("classify-motion", cfg);
  const Report b = execute("classify-motion", cfg);
  CHECK(a.digest() == b.digest());
  CHECK(a.inputs_digest == b.inputs_digest);
  export_csv(a, scratch("a"));
  export_csv(b, scratch("b"));
  CHECK(slurp(scratch("a") / "motion_classes.csv") == slurp(scratch("b") / "motion_classes.csv"));

  RunFlags other;
  other.seed = cfg.seed + 1;
  const Report c = execute("classify-motion", cfg, other);
  CHECK(c.digest() != a.digest());
  CHECK(c.inputs_digest != a.inputs_digest);
}

TEST_CASE("empty tables export a header only") {
  Report r;
  r.tables.push_back({"empty", {"plane_index", "candidate_index"}, {}});
  export_csv(r, scratch("empty"));
  CHECK(slurp(scratch("empty") / "empty.csv") == "plane_index,candidate_index\r\n");
}

TEST_CASE("exit codes") {
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << R"({"cameras": [{"matrix": [[1, 2]]}]})";
  const auto out = scratch("bad_report.json");
  std::filesystem::remove(out);
  CliRequest req{"simulate", bad, {}, out, std::nullopt};
  CHECK(run(req) == 2);
  CHECK_FALSE(std::filesystem::exists(out));

  req.command = "reconstruct-chow";
  req.config_path = kScenes / "chow_cubic_six_views.json";
  CHECK(run(req) == 1);
  CHECK(std::filesystem::exists(out));

  req.command = "reconstruct-chow";
  req.config_path = kScenes / "chow_conic.json";
  CHECK(run(req) == 0);

  req.command = "no-such-command";
  CHECK(run(req) == 2);

  CliRequest missing{"kruppa-check", std::nullopt, {}, std::nullopt, std::nullopt};
  CHECK(run(missing) == 2);
}

TEST_CASE("a failed verdict is never swallowed") {
  const Report r = execute("reconstruct-dual", load_config(kScenes / "dual_cubic_three_views.json"));
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.verdicts.at("curve0.reconstruction"));
  CHECK(r.metrics.at("curve0.rank_deficit") == 4);
  CHECK(r.to_json()["passed"] == false);
}
