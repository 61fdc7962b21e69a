#pragma once

#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "curvemvg/camera.hpp"
#include "curvemvg/curve.hpp"
#include "curvemvg/reconstruct.hpp"

namespace curvemvg::dyn {

// Image point of a tracked point seen by one camera at one of its own
// instants. Cameras are not synchronized: time_id is local to camera_id.
struct Detection {
  int camera_id = 0;
  int point_id = 0;
  int time_id = 0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

struct RayObservation {
  int camera_id = 0;
  int point_id = 0;
  int time_id = 0;
  geom::PluckerLine ray;  // unit norm
};

struct LiftResult {
  std::vector<RayObservation> rays;
  std::vector<std::string> warnings;
};

// One optical ray per detection. Detections whose ray vanishes are skipped
// with a warning. Throws DimensionMismatch for an invalid camera index.
LiftResult lift_observations(const std::vector<geom::Camera>& cams,
                             const std::vector<Detection>& detections);

std::vector<geom::PluckerLine> rays_of(const std::vector<RayObservation>& obs);

enum class MotionKind { kStatic, kLine, kConic, kCurve, kUnclassified };

std::string motion_kind_name(MotionKind kind);

struct ModelTrial {
  std::string model;  // "static", "line", "chow"
  int degree = 0;
  double residual = 0.0;
  bool accepted = false;
  std::string note;
};

using MotionModel = std::variant<std::monostate, Eigen::Vector4d,
                                 geom::PluckerLine, recon::ChowForm>;

struct MotionClass {
  MotionKind kind = MotionKind::kUnclassified;
  int degree = 0;  // 0 static, 1 line, d for Chow forms
  MotionModel model;
  double tolerance = 0.0;
  std::vector<ModelTrial> trace;
};

struct ClassifyOptions {
  int d_max = 3;
  double tol = 1e-7;
  // Image noise level; acceptance uses max(tol, 10 noise_sigma).
  double noise_sigma = 0.0;

  double effective_tol() const;
};

// Ascending model selection: static point, line, conic, then degree-d
// curves up to d_max. The first accepted model wins.
MotionClass classify_motion(const std::vector<geom::PluckerLine>& rays,
                            const ClassifyOptions& options = {});

struct StaticFit {
  Eigen::Vector4d point;  // unit norm
  double residual = 0.0;  // max point_residual over the rays
};

// Least-squares common point of the rays. Throws FitError when some ray
// misses it by more than tol.
StaticFit recover_static_point(const std::vector<geom::PluckerLine>& rays,
                               double tol = 1e-7);

struct LineFit {
  geom::PluckerLine line;         // unit norm, on the Grassmann quadric
  double pairing_residual = 0.0;  // max normalized <ray, line>
  double quadric_residual = 0.0;  // of the hyperplane before projection
  double nullity = 0.0;           // sigma6 / sigma5 of the ray matrix
};

// Hyperplane containing all rays, read back through the incidence pairing
// as a line. Throws FitError if the hyperplane is not unique (ratio above
// tol) or lies off the quadric by more than max(1e-4, tol).
LineFit recover_line_motion(const std::vector<geom::PluckerLine>& rays,
                            double tol = 1e-7);

struct TrajectoryFit {
  recon::ChowForm chow;
  double heldout_residual = 0.0;  // max chow_residual over held-out rays
  int fit_rays = 0;
  int heldout_rays = 0;
};

// Every fifth ray is held out; the rest feed chow_fit_lines. Requires at
// least 2 * chow_unknowns(d) rays. Throws RankDeficit from the fit.
TrajectoryFit recover_trajectory_chow(const std::vector<geom::PluckerLine>& rays,
                                      int d);

struct Localization {
  std::vector<Eigen::Vector4d> candidates;  // unit norm
  std::vector<double> violations;
  bool ambiguous = false;
};

// Points of the ray where the trajectory meets it: minima of the Chow
// membership violation along the ray (512-sample scan, then Gauss-Newton).
// Candidates are ordered by distance to the hint when one is given. Throws
// FitError when no minimum falls below tol.
Localization localize_on_ray(const recon::ChowForm& g,
                             const geom::PluckerLine& ray,
                             const std::optional<Eigen::Vector4d>& hint = std::nullopt,
                             double tol = 1e-7);

enum class TrajectoryKind { kStatic, kLine, kConic, kTwistedCubic };

std::string trajectory_name(TrajectoryKind kind);
// Throws ConfigError for unknown names.
TrajectoryKind trajectory_from_name(const std::string& name);

struct DynamicScene {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  std::vector<geom::Camera> cams;
  std::vector<Detection> detections;
  // True position of the point at each detection, aligned with detections.
  std::vector<Eigen::Vector4d> positions;
  Eigen::Vector4d static_point = Eigen::Vector4d::Zero();
  geom::PluckerLine line;
  std::optional<curves::RationalCurve3D> curve;
};

// Point moving along a random trajectory of the given kind, seen by
// n_cams random cameras at frames_per_cam unsynchronized instants each.
// Noise perturbs each unit image vector in its tangent plane.
DynamicScene simulate_dynamic_scene(TrajectoryKind kind, int n_cams,
                                    int frames_per_cam, double noise_sigma,
                                    std::mt19937_64& rng);

// Same with given cameras and per-camera sampling times (curve parameters
// in [0, pi)). The trajectory is drawn from rng.
DynamicScene simulate_dynamic_scene(TrajectoryKind kind,
                                    const std::vector<geom::Camera>& cams,
                                    const std::vector<std::vector<double>>& times,
                                    double noise_sigma, std::mt19937_64& rng);

// Perturbs a unit image vector by isotropic Gaussian noise in its tangent
// plane.
Eigen::Vector3d perturb_image_point(const Eigen::Vector3d& p, double sigma,
                                    std::mt19937_64& rng);

}  // namespace curvemvg::dyn
