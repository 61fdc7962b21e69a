#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "curvemvg/camera.hpp"
#include "curvemvg/curve.hpp"
#include "curvemvg/dynamics.hpp"
#include "curvemvg/reconstruct.hpp"

namespace curvemvg::scene {

struct RandomCamera {};

struct ParametricCamera {
  geom::Intrinsics intrinsics;
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

using CameraSpec = std::variant<geom::Matrix34d, ParametricCamera, RandomCamera>;

struct PresetCurve {
  curves::Preset preset = curves::Preset::kConic;
  std::optional<std::uint64_t> seed;  // drawn from the scene RNG when absent
};

using CurveSpec = std::variant<PresetCurve, curves::Matrix4Xd>;

struct DynamicPointSpec {
  dyn::TrajectoryKind trajectory = dyn::TrajectoryKind::kStatic;
  int frames_per_camera = 15;
  // One list of curve parameters per camera; random when empty.
  std::vector<std::vector<double>> times;
};

struct Options {
  int n_planes = 100;
  bool third_view = true;
  int samples_per_view = 20;
  int heldout = 100;
  std::optional<int> views;
  int d_max = 3;
  double tol = 1e-7;
  std::pair<int, int> d_range{2, 4};
  std::pair<int, int> m_range{2, 8};
};

struct SceneConfig {
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::vector<CameraSpec> cameras;
  std::vector<CurveSpec> curves;
  std::vector<DynamicPointSpec> dynamic_points;
  Options options;
  // Parsed document, re-serialized with sorted keys.
  nlohmann::json canonical;
};

// Throws ConfigError naming the offending key.
SceneConfig parse_config(const nlohmann::json& doc);
SceneConfig load_config(const std::filesystem::path& path);

struct Scene {
  std::vector<geom::Camera> cams;
  std::vector<curves::RationalCurve3D> curves;
  std::vector<std::string> curve_labels;
};

// Cameras first, then curves, all randomness drawn from rng.
Scene realize(const SceneConfig& config, std::mt19937_64& rng);

// Jittered sample i of n equal slices of [0, pi).
double stratified_theta(std::mt19937_64& rng, int i, int n);

// Tangent lines per view, each perturbed in its tangent plane by sigma.
std::vector<recon::ViewLines> sample_tangent_views(
    const curves::RationalCurve3D& curve, const std::vector<geom::Camera>& cams,
    int per_view, double sigma, std::mt19937_64& rng);

std::vector<recon::ViewPoints> sample_point_views(
    const curves::RationalCurve3D& curve, const std::vector<geom::Camera>& cams,
    int per_view, double sigma, std::mt19937_64& rng);

// Plane through the tangent line at theta and a random point.
Eigen::Vector4d random_tangent_plane(const curves::RationalCurve3D& curve,
                                     double theta, std::mt19937_64& rng);

Eigen::Vector4d random_plane(std::mt19937_64& rng);

// Line through the curve point at theta and a random point.
geom::PluckerLine random_meeting_line(const curves::RationalCurve3D& curve,
                                      double theta, std::mt19937_64& rng);

geom::PluckerLine random_line(std::mt19937_64& rng);

}  // namespace curvemvg::scene
