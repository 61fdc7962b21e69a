#include "curvemvg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "curvemvg/errors.hpp"
#include "curvemvg/linalg.hpp"

namespace curvemvg::dyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kScanSamples = 512;
constexpr int kStaticMinRays = 8;
constexpr int kHeldOutStride = 5;

Eigen::MatrixXd ray_matrix(const std::vector<geom::PluckerLine>& rays) {
  Eigen::MatrixXd m(rays.size(), 6);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    m.row(i) = rays[i].coords().normalized().transpose();
  }
  return m;
}

double grassmann_quadric(const geom::Vector6d& x) {
  return x[0] * x[3] + x[1] * x[4] + x[2] * x[5];
}

geom::Vector6d swap_blocks(const geom::Vector6d& v) {
  geom::Vector6d s;
  s << v.tail<3>(), v.head<3>();
  return s;
}

Eigen::Vector4d gaussian4(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) v[i] = normal(rng);
  return v;
}

// Residuals of Gamma on lines joining P(s) to fixed auxiliary points.
class MembershipProfile {
 public:
  MembershipProfile(const recon::ChowForm& g, const geom::PluckerLine& ray)
      : gamma_(g.Gamma.normalized()) {
    const auto [a, b] = ray.normalized().points();
    a_ = a.normalized();
    b_ = (b - b.dot(a_) * a_).normalized();
    std::mt19937_64 rng(0x5eedULL);
    while (aux_.size() < 3) {
      Eigen::Vector4d r = gaussian4(rng);
      r -= r.dot(a_) * a_ + r.dot(b_) * b_;
      if (r.norm() > 1e-3) aux_.push_back(r.normalized());
    }
  }

  Eigen::Vector4d point(double s) const {
    return std::cos(s) * a_ + std::sin(s) * b_;
  }

  Eigen::Vector3d residuals(double s) const {
    const Eigen::Vector4d p = point(s);
    Eigen::Vector3d g;
    for (int j = 0; j < 3; ++j) {
      const geom::Vector6d line =
          geom::PluckerLine::join(p, aux_[j]).coords().normalized();
      g[j] = gamma_(line);
    }
    return g;
  }

  double violation(double s) const { return residuals(s).norm() / std::sqrt(3.0); }

 private:
  poly::HomogeneousPolynomial gamma_;
  Eigen::Vector4d a_;
  Eigen::Vector4d b_;
  std::vector<Eigen::Vector4d> aux_;
};

double polish(const MembershipProfile& profile, double s, double bracket) {
  const double lo = s - bracket, hi = s + bracket;
  // golden-section search on the violation
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = profile.violation(c), fd = profile.violation(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = profile.violation(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = profile.violation(d);
    }
  }
  s = 0.5 * (a + b);
  // Gauss-Newton on the residual vector
  for (int it = 0; it < 10; ++it) {
    const double h = 1e-7;
    const Eigen::Vector3d g = profile.residuals(s);
    const Eigen::Vector3d dg = (profile.residuals(s + h) - profile.residuals(s - h)) / (2 * h);
    const double denom = dg.squaredNorm();
    if (denom == 0.0) break;
    const double step = g.dot(dg) / denom;
    if (!std::isfinite(step) || std::abs(step) > bracket) break;
    const double next = s - step;
    if (profile.violation(next) > profile.violation(s)) break;
    s = next;
    if (std::abs(step) < 1e-15) break;
  }
  return s;
}

}  // namespace

LiftResult lift_observations(const std::vector<geom::Camera>& cams,
                             const std::vector<Detection>& detections) {
  LiftResult out;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    if (det.camera_id < 0 || det.camera_id >= static_cast<int>(cams.size())) {
      throw DimensionMismatch("lift_observations: detection " + std::to_string(i) +
                              " references camera " + std::to_string(det.camera_id));
    }
    const geom::Vector6d ray = cams[det.camera_id].ray_matrix() * det.p;
    if (det.p.norm() == 0.0 || ray.norm() <= 1e-12 * det.p.norm()) {
      out.warnings.push_back("detection " + std::to_string(i) +
                             " has no optical ray; skipped");
      continue;
    }
    out.rays.push_back({det.camera_id, det.point_id, det.time_id,
                        geom::PluckerLine(geom::Vector6d(ray.normalized()))});
  }
  return out;
}

std::vector<geom::PluckerLine> rays_of(const std::vector<RayObservation>& obs) {
  std::vector<geom::PluckerLine> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(o.ray);
  return out;
}

std::string motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kStatic: return "static";
    case MotionKind::kLine: return "line";
    case MotionKind::kConic: return "conic";
    case MotionKind::kCurve: return "curve";
    case MotionKind::kUnclassified: return "unclassified";
  }
  return "";
}

double ClassifyOptions::effective_tol() const {
  return std::max(tol, 10.0 * noise_sigma);
}

StaticFit recover_static_point(const std::vector<geom::PluckerLine>& rays,
                               double tol) {
  if (rays.size() < 2) throw FitError("recover_static_point: needs two rays");
  Eigen::MatrixXd stacked(4 * rays.size(), 4);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    stacked.block(4 * i, 0, 4, 4) = rays[i].normalized().plane_matrix();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
  StaticFit fit;
  fit.point = linalg::canonical(svd.matrixV().col(3));
  for (const auto& ray : rays) {
    fit.residual = std::max(fit.residual, ray.normalized().point_residual(fit.point));
  }
  if (fit.residual > tol) {
    std::ostringstream msg;
    msg << "recover_static_point: rays miss the common point by " << fit.residual;
    throw FitError(msg.str());
  }
  return fit;
}

LineFit recover_line_motion(const std::vector<geom::PluckerLine>& rays,
                            double tol) {
  if (rays.size() < 5) throw FitError("recover_line_motion: needs five rays");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ray_matrix(rays), Eigen::ComputeFullV);
  const Eigen::VectorXd s = linalg::padded_singular_values(ray_matrix(rays));
  LineFit fit;
  fit.nullity = s[4] > 0.0 ? s[5] / s[4] : 1.0;
  if (fit.nullity > tol) {
    int dim = 0;
    for (int i = 0; i < 6; ++i) dim += s[i] <= tol * s[0] ? 1 : 0;
    std::ostringstream msg;
    msg << "recover_line_motion: hyperplane not unique (nullspace dimension "
        << dim << ", ratio " << fit.nullity << ")";
    throw FitError(msg.str());
  }
  const geom::Vector6d h = svd.matrixV().col(5).normalized();
  fit.quadric_residual = std::abs(grassmann_quadric(h));
  if (fit.quadric_residual > std::max(1e-4, tol)) {
    std::ostringstream msg;
    msg << "recover_line_motion: hyperplane off the Grassmann quadric by "
        << fit.quadric_residual;
    throw FitError(msg.str());
  }
  // h . L = <J h, L>, so the line is J h; one Newton step onto the quadric
  geom::Vector6d x = swap_blocks(h);
  x -= grassmann_quadric(x) / x.squaredNorm() * swap_blocks(x);
  fit.line = geom::PluckerLine(geom::Vector6d(linalg::canonical(x)));
  for (const auto& ray : rays) {
    fit.pairing_residual =
        std::max(fit.pairing_residual, std::abs(geom::normalized_incidence(ray, fit.line)));
  }
  return fit;
}

TrajectoryFit recover_trajectory_chow(const std::vector<geom::PluckerLine>& rays,
                                      int d) {
  const int needed = 2 * recon::chow_unknowns(d);
  if (static_cast<int>(rays.size()) < needed) {
    throw FitError("recover_trajectory_chow: degree " + std::to_string(d) +
                   " needs " + std::to_string(needed) + " rays, got " +
                   std::to_string(rays.size()));
  }
  std::vector<geom::Vector6d> fit_lines;
  std::vector<const geom::PluckerLine*> held_out;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    if (i % kHeldOutStride == kHeldOutStride - 1) {
      held_out.push_back(&rays[i]);
    } else {
      fit_lines.push_back(rays[i].coords());
    }
  }
  TrajectoryFit out;
  out.chow = recon::chow_fit_lines(fit_lines, d);
  out.fit_rays = static_cast<int>(fit_lines.size());
  out.heldout_rays = static_cast<int>(held_out.size());
  for (const auto* ray : held_out) {
    out.heldout_residual = std::max(out.heldout_residual, recon::chow_residual(out.chow, *ray));
  }
  return out;
}

MotionClass classify_motion(const std::vector<geom::PluckerLine>& rays,
                            const ClassifyOptions& options) {
  MotionClass out;
  out.tolerance = options.effective_tol();
  const double tol = out.tolerance;
  const int n = static_cast<int>(rays.size());
  const Eigen::VectorXd s =
      n == 0 ? Eigen::VectorXd::Zero(6) : linalg::padded_singular_values(ray_matrix(rays));

  ModelTrial st{"static", 0, 1.0, false, ""};
  if (n < kStaticMinRays) {
    st.note = "needs " + std::to_string(kStaticMinRays) + " rays";
  } else {
    st.residual = s[2] > 0.0 ? s[3] / s[2] : 1.0;
    if (st.residual <= tol) {
      try {
        const StaticFit fit = recover_static_point(rays, std::max(tol, 1e-7));
        st.accepted = true;
        out.model = fit.point;
      } catch (const FitError& e) {
        st.note = e.what();
      }
    }
  }
  out.trace.push_back(st);
  if (st.accepted) {
    out.kind = MotionKind::kStatic;
    out.degree = 0;
    return out;
  }

  ModelTrial ln{"line", 1, 1.0, false, ""};
  if (n >= 5) {
    try {
      const LineFit fit = recover_line_motion(rays, tol);
      ln.residual = fit.nullity;
      ln.accepted = true;
      out.model = fit.line;
    } catch (const FitError& e) {
      ln.residual = s[4] > 0.0 ? s[5] / s[4] : 1.0;
      ln.note = e.what();
    }
  } else {
    ln.note = "needs 5 rays";
  }
  out.trace.push_back(ln);
  if (ln.accepted) {
    out.kind = MotionKind::kLine;
    out.degree = 1;
    return out;
  }

  for (int d = 2; d <= options.d_max; ++d) {
    ModelTrial ch{"chow", d, 1.0, false, ""};
    try {
      const TrajectoryFit fit = recover_trajectory_chow(rays, d);
      ch.residual = fit.heldout_residual;
      if (fit.heldout_residual <= tol) {
        ch.accepted = true;
        out.model = fit.chow;
      }
    } catch (const RankDeficit& e) {
      ch.note = e.what();
    } catch (const FitError& e) {
      ch.note = e.what();
      out.trace.push_back(ch);
      break;
    }
    out.trace.push_back(ch);
    if (ch.accepted) {
      out.kind = d == 2 ? MotionKind::kConic : MotionKind::kCurve;
      out.degree = d;
      return out;
    }
  }
  out.kind = MotionKind::kUnclassified;
  out.degree = -1;
  out.model = std::monostate{};
  return out;
}

Localization localize_on_ray(const recon::ChowForm& g,
                             const geom::PluckerLine& ray,
                             const std::optional<Eigen::Vector4d>& hint,
                             double tol) {
  const MembershipProfile profile(g, ray);
  std::vector<double> values(kScanSamples);
  const double step = kPi / kScanSamples;
  for (int i = 0; i < kScanSamples; ++i) values[i] = profile.violation(i * step);

  std::vector<double> minima;
  for (int i = 0; i < kScanSamples; ++i) {
    const double prev = values[(i + kScanSamples - 1) % kScanSamples];
    const double next = values[(i + 1) % kScanSamples];
    if (values[i] <= prev && values[i] < next) {
      minima.push_back(polish(profile, i * step, step));
    }
  }

  Localization out;
  for (double s : minima) {
    const double v = profile.violation(s);
    if (v > tol) continue;
    const Eigen::Vector4d p = linalg::canonical(profile.point(s));
    bool duplicate = false;
    for (const auto& q : out.candidates) {
      duplicate = duplicate || linalg::projective_distance(p, q) < 1e-6;
    }
    if (duplicate) continue;
    out.candidates.push_back(p);
    out.violations.push_back(v);
  }
  if (out.candidates.empty()) {
    throw FitError("localize_on_ray: no point of the ray satisfies the Chow form");
  }
  if (hint) {
    std::vector<std::size_t> order(out.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return linalg::projective_distance(out.candidates[a], *hint) <
             linalg::projective_distance(out.candidates[b], *hint);
    });
    Localization sorted;
    for (std::size_t i : order) {
      sorted.candidates.push_back(out.candidates[i]);
      sorted.violations.push_back(out.violations[i]);
    }
    out = std::move(sorted);
  }
  out.ambiguous = out.candidates.size() > 1;
  return out;
}

std::string trajectory_name(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kStatic: return "static";
    case TrajectoryKind::kLine: return "line";
    case TrajectoryKind::kConic: return "conic";
    case TrajectoryKind::kTwistedCubic: return "twisted_cubic";
  }
  return "";
}

TrajectoryKind trajectory_from_name(const std::string& name) {
  if (name == "static") return TrajectoryKind::kStatic;
  if (name == "line") return TrajectoryKind::kLine;
  if (name == "conic") return TrajectoryKind::kConic;
  if (name == "twisted_cubic") return TrajectoryKind::kTwistedCubic;
  throw ConfigError("unknown trajectory '" + name + "'");
}

Eigen::Vector3d perturb_image_point(const Eigen::Vector3d& p, double sigma,
                                    std::mt19937_64& rng) {
  const Eigen::Vector3d u = p.normalized();
  if (sigma <= 0.0) return u;
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::Vector3d g(normal(rng), normal(rng), normal(rng));
  g -= g.dot(u) * u;
  return (u + g).normalized();
}

DynamicScene simulate_dynamic_scene(TrajectoryKind kind, int n_cams,
                                    int frames_per_cam, double noise_sigma,
                                    std::mt19937_64& rng) {
  if (n_cams < 1 || frames_per_cam < 1) {
    throw ConfigError("simulate_dynamic_scene: needs cameras and frames");
  }
  std::vector<geom::Camera> cams;
  for (int c = 0; c < n_cams; ++c) cams.push_back(geom::random_camera(rng));
  std::uniform_real_distribution<double> time(0.0, kPi);
  std::vector<std::vector<double>> times(n_cams);
  for (auto& t : times) {
    for (int k = 0; k < frames_per_cam; ++k) t.push_back(time(rng));
  }
  return simulate_dynamic_scene(kind, cams, times, noise_sigma, rng);
}

DynamicScene simulate_dynamic_scene(TrajectoryKind kind,
                                    const std::vector<geom::Camera>& cams,
                                    const std::vector<std::vector<double>>& times,
                                    double noise_sigma, std::mt19937_64& rng) {
  if (times.size() != cams.size()) {
    throw ConfigError("simulate_dynamic_scene: one time list per camera required");
  }
  DynamicScene scene;
  scene.kind = kind;
  scene.cams = cams;
  Eigen::Vector4d a = Eigen::Vector4d::Zero(), b = Eigen::Vector4d::Zero();
  switch (kind) {
    case TrajectoryKind::kStatic:
      scene.static_point = gaussian4(rng).normalized();
      break;
    case TrajectoryKind::kLine:
      a = gaussian4(rng).normalized();
      b = gaussian4(rng);
      b = (b - b.dot(a) * a).normalized();
      scene.line = geom::PluckerLine::join(a, b).normalized();
      break;
    case TrajectoryKind::kConic:
      scene.curve = curves::preset_curve(curves::Preset::kConic, rng());
      break;
    case TrajectoryKind::kTwistedCubic:
      scene.curve = curves::preset_curve(curves::Preset::kTwistedCubic, rng());
      break;
  }
  for (std::size_t c = 0; c < cams.size(); ++c) {
    for (std::size_t k = 0; k < times[c].size(); ++k) {
      const double t = times[c][k];
      Eigen::Vector4d x;
      switch (kind) {
        case TrajectoryKind::kStatic: x = scene.static_point; break;
        case TrajectoryKind::kLine: x = std::cos(t) * a + std::sin(t) * b; break;
        default: x = scene.curve->point(t).normalized(); break;
      }
      const Eigen::Vector3d p =
          perturb_image_point(cams[c].project(x), noise_sigma, rng);
      scene.detections.push_back({static_cast<int>(c), 0, static_cast<int>(k), p});
      scene.positions.push_back(x);
    }
  }
  return scene;
}

}  // namespace curvemvg::dyn
