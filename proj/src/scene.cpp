#include "curvemvg/scene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "curvemvg/errors.hpp"

namespace curvemvg::scene {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string child(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

long long integer(const json& v, const std::string& path, long long lo,
                  long long hi) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) {
    fail(path, "expected an integer in [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "]");
  }
  return x;
}

Eigen::MatrixXd matrix(const json& v, const std::string& path, int rows,
                       int cols) {
  if (!v.is_array() || (rows > 0 && static_cast<int>(v.size()) != rows)) {
    fail(path, "expected " + (rows > 0 ? std::to_string(rows) : std::string("a list of")) +
                   " rows");
  }
  const int r = static_cast<int>(v.size());
  int c = cols;
  if (c < 0) {
    if (r == 0 || !v[0].is_array()) fail(child(path, 0), "expected a row");
    c = static_cast<int>(v[0].size());
  }
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    const std::string rp = child(path, i);
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != c) {
      fail(rp, "expected " + std::to_string(c) + " entries");
    }
    for (int j = 0; j < c; ++j) m(i, j) = number(v[i][j], child(rp, j));
  }
  return m;
}

CameraSpec parse_camera(const json& v, const std::string& path) {
  check_keys(v, path, {"matrix", "intrinsics", "rotation", "translation", "random"});
  if (v.contains("random")) {
    if (v.size() != 1 || !v["random"].is_boolean() || !v["random"].get<bool>()) {
      fail(child(path, "random"), "expected true and no other keys");
    }
    return RandomCamera{};
  }
  if (v.contains("matrix")) {
    if (v.size() != 1) fail(path, "matrix excludes other camera keys");
    const geom::Matrix34d m = matrix(v["matrix"], child(path, "matrix"), 3, 4);
    try {
      geom::Camera check(m);
    } catch (const DegenerateGeometry&) {
      fail(child(path, "matrix"), "projection matrix must have rank 3");
    }
    return m;
  }
  for (const char* key : {"intrinsics", "rotation", "translation"}) {
    if (!v.contains(key)) fail(child(path, key), "missing");
  }
  ParametricCamera cam;
  const std::string kp = child(path, "intrinsics");
  const json& k = v["intrinsics"];
  check_keys(k, kp, {"focal", "aspect", "skew", "u0", "v0"});
  if (k.contains("focal")) cam.intrinsics.focal = number(k["focal"], child(kp, "focal"));
  if (k.contains("aspect")) cam.intrinsics.aspect = number(k["aspect"], child(kp, "aspect"));
  if (k.contains("skew")) cam.intrinsics.skew = number(k["skew"], child(kp, "skew"));
  if (k.contains("u0")) cam.intrinsics.u0 = number(k["u0"], child(kp, "u0"));
  if (k.contains("v0")) cam.intrinsics.v0 = number(k["v0"], child(kp, "v0"));
  if (cam.intrinsics.focal == 0.0 || cam.intrinsics.aspect == 0.0) {
    fail(kp, "focal and aspect must be nonzero");
  }
  cam.rotation = matrix(v["rotation"], child(path, "rotation"), 3, 3);
  const double orth = (cam.rotation.transpose() * cam.rotation -
                       Eigen::Matrix3d::Identity()).norm();
  if (orth > 1e-9 || cam.rotation.determinant() < 0.0) {
    fail(child(path, "rotation"), "not a rotation matrix");
  }
  const std::string tp = child(path, "translation");
  if (!v["translation"].is_array() || v["translation"].size() != 3) fail(tp, "expected 3 numbers");
  for (int i = 0; i < 3; ++i) cam.translation[i] = number(v["translation"][i], child(tp, i));
  return cam;
}

CurveSpec parse_curve(const json& v, const std::string& path) {
  check_keys(v, path, {"preset", "seed", "coefficients"});
  if (v.contains("preset") == v.contains("coefficients")) {
    fail(path, "exactly one of preset or coefficients required");
  }
  if (v.contains("coefficients")) {
    if (v.contains("seed")) fail(child(path, "seed"), "only valid with a preset");
    const std::string cp = child(path, "coefficients");
    const curves::Matrix4Xd c = matrix(v["coefficients"], cp, 4, -1);
    try {
      curves::RationalCurve3D check(c);
    } catch (const DegenerateGeometry& e) {
      fail(cp, e.what());
    }
    return c;
  }
  if (!v["preset"].is_string()) fail(child(path, "preset"), "expected a string");
  PresetCurve p;
  try {
    p.preset = curves::preset_from_name(v["preset"].get<std::string>());
  } catch (const Error&) {
    fail(child(path, "preset"), "unknown preset '" + v["preset"].get<std::string>() + "'");
  }
  if (v.contains("seed")) {
    p.seed = static_cast<std::uint64_t>(
        integer(v["seed"], child(path, "seed"), 0, std::numeric_limits<long long>::max()));
  }
  return p;
}

DynamicPointSpec parse_dynamic(const json& v, const std::string& path) {
  check_keys(v, path, {"trajectory", "frames_per_camera", "times"});
  DynamicPointSpec d;
  if (!v.contains("trajectory") || !v["trajectory"].is_string()) {
    fail(child(path, "trajectory"), "expected a trajectory name");
  }
  try {
    d.trajectory = dyn::trajectory_from_name(v["trajectory"].get<std::string>());
  } catch (const ConfigError&) {
    fail(child(path, "trajectory"),
         "unknown trajectory '" + v["trajectory"].get<std::string>() + "'");
  }
  if (v.contains("frames_per_camera")) {
    if (v.contains("times")) fail(child(path, "frames_per_camera"), "conflicts with times");
    d.frames_per_camera =
        static_cast<int>(integer(v["frames_per_camera"], child(path, "frames_per_camera"), 1, 100000));
  }
  if (v.contains("times")) {
    const std::string tp = child(path, "times");
    if (!v["times"].is_array()) fail(tp, "expected one list per camera");
    for (std::size_t c = 0; c < v["times"].size(); ++c) {
      const json& row = v["times"][c];
      if (!row.is_array()) fail(child(tp, c), "expected a list of parameters");
      std::vector<double> t;
      for (std::size_t k = 0; k < row.size(); ++k) {
        t.push_back(number(row[k], child(child(tp, c), k)));
      }
      d.times.push_back(std::move(t));
    }
  }
  return d;
}

std::pair<int, int> range(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) fail(path, "expected [lo, hi]");
  const int lo = static_cast<int>(integer(v[0], child(path, 0), 1, 64));
  const int hi = static_cast<int>(integer(v[1], child(path, 1), 1, 64));
  if (lo > hi) fail(path, "lo exceeds hi");
  return {lo, hi};
}

Options parse_options(const json& v, const std::string& path) {
  check_keys(v, path, {"n_planes", "third_view", "samples_per_view", "heldout",
                       "views", "d_max", "tol", "d_range", "m_range"});
  Options o;
  if (v.contains("n_planes")) o.n_planes = static_cast<int>(integer(v["n_planes"], child(path, "n_planes"), 1, 100000));
  if (v.contains("third_view")) {
    if (!v["third_view"].is_boolean()) fail(child(path, "third_view"), "expected a boolean");
    o.third_view = v["third_view"].get<bool>();
  }
  if (v.contains("samples_per_view")) o.samples_per_view = static_cast<int>(integer(v["samples_per_view"], child(path, "samples_per_view"), 1, 100000));
  if (v.contains("heldout")) o.heldout = static_cast<int>(integer(v["heldout"], child(path, "heldout"), 1, 1000000));
  if (v.contains("views")) o.views = static_cast<int>(integer(v["views"], child(path, "views"), 1, 10000));
  if (v.contains("d_max")) o.d_max = static_cast<int>(integer(v["d_max"], child(path, "d_max"), 2, 8));
  if (v.contains("tol")) {
    o.tol = number(v["tol"], child(path, "tol"));
    if (o.tol <= 0.0) fail(child(path, "tol"), "must be positive");
  }
  if (v.contains("d_range")) o.d_range = range(v["d_range"], child(path, "d_range"));
  if (v.contains("m_range")) o.m_range = range(v["m_range"], child(path, "m_range"));
  return o;
}

Eigen::Vector4d gaussian4(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

SceneConfig parse_config(const json& doc) {
  check_keys(doc, "", {"seed", "noise_sigma", "cameras", "random_cameras",
                       "curves", "dynamic_points", "options"});
  SceneConfig cfg;
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      fail("seed", "expected a non-negative 64-bit integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("noise_sigma")) {
    cfg.noise_sigma = number(doc["noise_sigma"], "noise_sigma");
    if (cfg.noise_sigma < 0.0) fail("noise_sigma", "must be non-negative");
  }
  if (doc.contains("cameras")) {
    if (!doc["cameras"].is_array()) fail("cameras", "expected a list");
    for (std::size_t i = 0; i < doc["cameras"].size(); ++i) {
      cfg.cameras.push_back(parse_camera(doc["cameras"][i], child("cameras", i)));
    }
  }
  if (doc.contains("random_cameras")) {
    const auto n = integer(doc["random_cameras"], "random_cameras", 0, 10000);
    for (long long i = 0; i < n; ++i) cfg.cameras.push_back(RandomCamera{});
  }
  if (doc.contains("curves")) {
    if (!doc["curves"].is_array()) fail("curves", "expected a list");
    for (std::size_t i = 0; i < doc["curves"].size(); ++i) {
      cfg.curves.push_back(parse_curve(doc["curves"][i], child("curves", i)));
    }
  }
  if (doc.contains("dynamic_points")) {
    if (!doc["dynamic_points"].is_array()) fail("dynamic_points", "expected a list");
    for (std::size_t i = 0; i < doc["dynamic_points"].size(); ++i) {
      DynamicPointSpec d = parse_dynamic(doc["dynamic_points"][i], child("dynamic_points", i));
      if (!d.times.empty() && d.times.size() != cfg.cameras.size()) {
        fail(child(child("dynamic_points", i), "times"), "expected one list per camera");
      }
      cfg.dynamic_points.push_back(std::move(d));
    }
  }
  if (doc.contains("options")) cfg.options = parse_options(doc["options"], "options");
  cfg.canonical = doc;
  return cfg;
}

SceneConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return parse_config(doc);
}

Scene realize(const SceneConfig& config, std::mt19937_64& rng) {
  Scene s;
  for (const CameraSpec& spec : config.cameras) {
    if (const auto* m = std::get_if<geom::Matrix34d>(&spec)) {
      s.cams.emplace_back(*m);
    } else if (const auto* p = std::get_if<ParametricCamera>(&spec)) {
      s.cams.push_back(geom::Camera::from_parameters(p->intrinsics, p->rotation, p->translation));
    } else {
      s.cams.push_back(geom::random_camera(rng));
    }
  }
  for (const CurveSpec& spec : config.curves) {
    if (const auto* p = std::get_if<PresetCurve>(&spec)) {
      const std::uint64_t seed = p->seed ? *p->seed : rng();
      s.curves.push_back(curves::preset_curve(p->preset, seed));
      s.curve_labels.push_back(curves::preset_name(p->preset));
    } else {
      const auto& c = std::get<curves::Matrix4Xd>(spec);
      s.curves.emplace_back(c);
      s.curve_labels.push_back("degree-" + std::to_string(c.cols() - 1));
    }
  }
  return s;
}

double stratified_theta(std::mt19937_64& rng, int i, int n) {
  return (i + std::uniform_real_distribution<double>(0.0, 1.0)(rng)) * kPi / n;
}

std::vector<recon::ViewLines> sample_tangent_views(
    const curves::RationalCurve3D& curve, const std::vector<geom::Camera>& cams,
    int per_view, double sigma, std::mt19937_64& rng) {
  std::vector<recon::ViewLines> out;
  for (const auto& cam : cams) {
    recon::ViewLines v{cam, {}};
    for (int i = 0; i < per_view; ++i) {
      const Eigen::Vector3d l =
          curves::tangent_line_2d(curve, cam, stratified_theta(rng, i, per_view));
      v.lines.push_back(dyn::perturb_image_point(l.normalized(), sigma, rng));
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<recon::ViewPoints> sample_point_views(
    const curves::RationalCurve3D& curve, const std::vector<geom::Camera>& cams,
    int per_view, double sigma, std::mt19937_64& rng) {
  std::vector<recon::ViewPoints> out;
  for (const auto& cam : cams) {
    recon::ViewPoints v{cam, {}};
    for (int i = 0; i < per_view; ++i) {
      const Eigen::Vector3d p =
          curves::image_point(curve, cam, stratified_theta(rng, i, per_view));
      v.points.push_back(dyn::perturb_image_point(p, sigma, rng));
    }
    out.push_back(std::move(v));
  }
  return out;
}

Eigen::Vector4d random_tangent_plane(const curves::RationalCurve3D& curve,
                                     double theta, std::mt19937_64& rng) {
  return (curve.tangent_line(theta).plane_matrix() * gaussian4(rng)).normalized();
}

Eigen::Vector4d random_plane(std::mt19937_64& rng) {
  return gaussian4(rng).normalized();
}

geom::PluckerLine random_meeting_line(const curves::RationalCurve3D& curve,
                                      double theta, std::mt19937_64& rng) {
  return geom::PluckerLine::join(curve.point(theta), gaussian4(rng));
}

geom::PluckerLine random_line(std::mt19937_64& rng) {
  const Eigen::Vector4d a = gaussian4(rng);
  return geom::PluckerLine::join(a, gaussian4(rng));
}

}  // namespace curvemvg::scene
