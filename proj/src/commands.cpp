#include "curvemvg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "curvemvg/dynamics.hpp"
#include "curvemvg/errors.hpp"
#include "curvemvg/kruppa.hpp"
#include "curvemvg/linalg.hpp"
#include "curvemvg/reconstruct.hpp"

namespace curvemvg::scene {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Context {
  const SceneConfig& config;
  std::mt19937_64 rng;
  double noise = 0.0;
  Scene scene;
  Report report;
  std::pair<int, int> d_range;
  std::pair<int, int> m_range;
};

std::string key(const std::string& prefix, int i) {
  return prefix + std::to_string(i);
}

std::string num(double x) { return format_number(x); }

json coeffs_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    rows.push_back(coeffs_json(m.row(i).transpose()));
  }
  return rows;
}

void require_cameras(const Context& ctx, std::size_t n, const std::string& command) {
  if (ctx.scene.cams.size() < n) {
    throw ConfigError("cameras: " + command + " needs at least " + std::to_string(n) +
                      " cameras, got " + std::to_string(ctx.scene.cams.size()));
  }
}

void require_curves(const Context& ctx, const std::string& command) {
  if (ctx.scene.curves.empty()) {
    throw ConfigError("curves: " + command + " needs at least one curve");
  }
}

// Runs body; a library failure becomes a failed verdict under `label`.
void guarded(Context& ctx, const std::string& label, const std::function<void()>& body) {
  try {
    body();
    ctx.report.verdict(label + ".completed", true);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    ctx.report.verdict(label + ".completed", false);
    ctx.report.warnings.push_back(label + ": " + e.what());
  }
}

void artifacts_scene(Context& ctx) {
  json cams = json::array();
  for (const auto& cam : ctx.scene.cams) cams.push_back(matrix_json(cam.matrix()));
  ctx.report.artifacts["cameras"] = cams;
  json curves = json::array();
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    curves.push_back({{"label", ctx.scene.curve_labels[c]},
                      {"coefficients", matrix_json(ctx.scene.curves[c].coefficients())}});
  }
  ctx.report.artifacts["curves"] = curves;
}

std::vector<geom::Camera> leading_views(const Context& ctx, const std::string& command) {
  const std::size_t k = ctx.config.options.views
                            ? static_cast<std::size_t>(*ctx.config.options.views)
                            : ctx.scene.cams.size();
  require_cameras(ctx, std::max<std::size_t>(k, 1), command);
  return {ctx.scene.cams.begin(), ctx.scene.cams.begin() + k};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double fraction_at_least(const std::vector<double>& v, double threshold) {
  if (v.empty()) return 0.0;
  const auto n = std::count_if(v.begin(), v.end(), [&](double x) { return x >= threshold; });
  return static_cast<double>(n) / static_cast<double>(v.size());
}

geom::EpipolarGeometry perturb_f(const geom::EpipolarGeometry& eg, double rel,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix3d g;
  for (int i = 0; i < 9; ++i) g(i) = normal(rng);
  geom::EpipolarGeometry out = eg;
  out.F = eg.F + rel * eg.F.norm() * g / g.norm();
  return out;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(Context& ctx) {
  require_cameras(ctx, 1, "simulate");
  require_curves(ctx, "simulate");
  artifacts_scene(ctx);
  const int n = ctx.config.options.samples_per_view;
  CsvTable samples{"image_samples",
                   {"curve_index", "view_index", "sample_index", "theta", "x", "y", "w"}, {}};
  json images = json::array();
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const auto& curve = ctx.scene.curves[c];
    const int d = curve.degree();
    for (std::size_t v = 0; v < ctx.scene.cams.size(); ++v) {
      const std::string label = key("curve", c) + key(".view", v);
      const auto& cam = ctx.scene.cams[v];
      guarded(ctx, label, [&] {
        const curves::ImageCurve f = curves::implicit_image_curve(curve, cam);
        const curves::DualCurveFit dual = curves::dual_image_curve(curve, cam);
        ctx.report.metric(label + ".degree", f.degree);
        ctx.report.metric(label + ".class", f.class_m);
        ctx.report.metric(label + ".nodes", f.nodes);
        ctx.report.metric(label + ".image_fit_gap", f.fit_gap);
        ctx.report.metric(label + ".image_residual", f.residual);
        ctx.report.metric(label + ".dual_fit_gap", dual.fit_gap);
        ctx.report.metric(label + ".dual_residual", dual.residual);
        ctx.report.verdict(label + ".image_curve", f.residual <= 1e-8 && f.degree == d);
        ctx.report.verdict(label + ".dual_curve",
                           dual.residual <= 1e-8 && dual.phi.degree() == curves::class_of(d, 0));
        ctx.report.verdict(label + ".node_count", f.nodes == curves::node_count(d, 0));
        images.push_back({{"curve", c}, {"view", v}, {"f", coeffs_json(f.f.coeffs())},
                          {"phi", coeffs_json(dual.phi.coeffs())}});
      });
      for (int i = 0; i < n; ++i) {
        const double theta = stratified_theta(ctx.rng, i, n);
        const Eigen::Vector3d p = dyn::perturb_image_point(
            curves::image_point(curve, cam, theta), ctx.noise, ctx.rng);
        samples.add({std::to_string(c), std::to_string(v), std::to_string(i), num(theta),
                     num(p[0]), num(p[1]), num(p[2])});
      }
    }
  }
  ctx.report.artifacts["image_curves"] = images;
  ctx.report.tables.push_back(std::move(samples));
}

// ------------------------------------------------------------ kruppa-check

void cmd_kruppa_check(Context& ctx) {
  require_cameras(ctx, 2, "kruppa-check");
  require_curves(ctx, "kruppa-check");
  artifacts_scene(ctx);
  const auto& cam1 = ctx.scene.cams[0];
  const auto& cam2 = ctx.scene.cams[1];
  CsvTable table{"kruppa_constraints", {"curve_index", "setting", "constraint_index", "value"}, {}};
  guarded(ctx, "epipolar", [&] {
    const geom::EpipolarGeometry eg = geom::fundamental(cam1, cam2);
    const geom::EpipolarResiduals r = geom::epipolar_residuals(eg);
    ctx.report.metric("epipolar.right", r.right);
    ctx.report.metric("epipolar.left", r.left);
    ctx.report.metric("epipolar.rank3", r.rank3);
    ctx.report.verdict("epipolar.residuals", r.right <= 1e-10 && r.left <= 1e-10);
    ctx.report.artifacts["F"] = matrix_json(eg.F);
    ctx.report.artifacts["e1"] = coeffs_json(eg.e1);
    ctx.report.artifacts["e2"] = coeffs_json(eg.e2);
  });
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const std::string label = key("curve", c);
    const auto& curve = ctx.scene.curves[c];
    guarded(ctx, label, [&] {
      const kruppa::KruppaInstance inst = kruppa::make_instance(curve, cam1, cam2);
      const kruppa::ProbedConstraints truth = kruppa::gen_kruppa_constraints(inst, ctx.rng());
      const kruppa::KruppaInstance bad =
          kruppa::with_geometry(inst, perturb_f(inst.eg, 1e-3, ctx.rng));
      const Eigen::VectorXd wrong = kruppa::gen_kruppa_constraints(bad, truth.probe);
      ctx.report.metric(label + ".class", inst.class_m());
      ctx.report.metric(label + ".constraint_count", static_cast<double>(truth.values.size()));
      ctx.report.metric(label + ".constraint_norm", truth.values.norm());
      ctx.report.metric(label + ".perturbed_norm", wrong.norm());
      ctx.report.verdict(label + ".ground_truth", truth.values.norm() <= 1e-9);
      ctx.report.verdict(label + ".perturbation_detected", wrong.norm() >= 1e-5);
      for (int i = 0; i < truth.values.size(); ++i) {
        table.add({std::to_string(c), "truth", std::to_string(i), num(truth.values[i])});
      }
      for (int i = 0; i < wrong.size(); ++i) {
        table.add({std::to_string(c), "perturbed", std::to_string(i), num(wrong[i])});
      }
      if (curve.degree() == 2) {
        const Eigen::Matrix3d C1 = curves::conic_matrix(curves::implicit_image_curve(curve, cam1).f);
        const Eigen::Matrix3d C2 = curves::conic_matrix(curves::implicit_image_curve(curve, cam2).f);
        const double classical = kruppa::classical_kruppa_residual(inst.eg, C1, C2);
        ctx.report.metric(label + ".classical_residual", classical);
        ctx.report.verdict(label + ".classical_identity", classical <= 1e-9);
      }
    });
  }
  ctx.report.tables.push_back(std::move(table));
}

// -------------------------------------------------------------- kruppa-dim

void cmd_kruppa_dim(Context& ctx) {
  require_cameras(ctx, 2, "kruppa-dim");
  require_curves(ctx, "kruppa-dim");
  artifacts_scene(ctx);
  const auto& cam1 = ctx.scene.cams[0];
  const auto& cam2 = ctx.scene.cams[1];
  CsvTable table{"singular_values", {"index", "value"}, {}};
  guarded(ctx, "dimension", [&] {
    std::vector<kruppa::KruppaInstance> instances;
    int sum_m = 0;
    for (const auto& curve : ctx.scene.curves) {
      instances.push_back(kruppa::make_instance(curve, cam1, cam2));
      sum_m += instances.back().class_m();
    }
    const geom::EpipolarGeometry eg = geom::fundamental(cam1, cam2);
    const kruppa::DimensionEstimate est = kruppa::solution_dimension(instances, eg);
    const int expected = std::max(7 - sum_m, 0);
    ctx.report.metric("sum_m", sum_m);
    ctx.report.metric("dimension", est.dimension);
    ctx.report.metric("expected_dimension", expected);
    ctx.report.metric("rank", est.rank);
    ctx.report.metric("gap_ratio", est.gap_ratio);
    ctx.report.metric("separation", est.separation);
    ctx.report.metric("indeterminate", est.indeterminate ? 1.0 : 0.0);
    ctx.report.verdict("dimension.matches_count", est.dimension == expected);
    ctx.report.verdict("dimension.unambiguous", !est.indeterminate && est.gap_ratio >= 10.0);
    for (int i = 0; i < est.singular_values.size(); ++i) {
      table.add({std::to_string(i), num(est.singular_values[i])});
    }
    ctx.report.artifacts["singular_values"] = coeffs_json(est.singular_values);
  });
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const std::string label = key("curve", c);
    guarded(ctx, label + ".tangency", [&] {
      const kruppa::TangencyData td = kruppa::tangency_points(ctx.scene.curves[c], cam1, cam2);
      const int real = static_cast<int>(td.Q.size());
      const bool degenerate = kruppa::quadric_degeneracy(td);
      ctx.report.metric(label + ".tangencies_expected", td.expected);
      ctx.report.metric(label + ".tangencies_real", real);
      ctx.report.metric(label + ".quadric_degenerate", degenerate ? 1.0 : 0.0);
      // quadrics through a line form a 7-dimensional space
      ctx.report.verdict(label + ".quadric_counting", degenerate == (real <= 6));
    });
  }
  ctx.report.tables.push_back(std::move(table));
}

// ------------------------------------------------------ reconstruct-points

void cmd_reconstruct_points(Context& ctx) {
  require_cameras(ctx, 2, "reconstruct-points");
  require_curves(ctx, "reconstruct-points");
  artifacts_scene(ctx);
  const auto& cams = ctx.scene.cams;
  const bool use_third = ctx.config.options.third_view && cams.size() >= 3;
  CsvTable table{"sweep_candidates",
                 {"plane_index", "candidate_index", "x", "y", "z", "w", "component_label",
                  "curve_index", "angle", "third_view_residual"},
                 {}};
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const std::string label = key("curve", c);
    const auto& curve = ctx.scene.curves[c];
    guarded(ctx, label, [&] {
      const int d = curve.degree();
      const curves::ImageCurve f1 = curves::implicit_image_curve(curve, cams[0]);
      const curves::ImageCurve f2 = curves::implicit_image_curve(curve, cams[1]);
      std::optional<curves::ImageCurve> f3;
      recon::SweepOptions opts;
      opts.n_planes = ctx.config.options.n_planes;
      opts.truth = &curve;
      if (use_third) {
        f3 = curves::implicit_image_curve(curve, cams[2]);
        opts.third_view = recon::ThirdView{&*f3, &cams[2]};
      }
      const recon::ComponentSplit split = recon::epipolar_sweep(f1, f2, cams[0], cams[1], opts);
      int min_count = std::numeric_limits<int>::max(), max_count = 0;
      int min_true = std::numeric_limits<int>::max(), max_true = 0;
      int labelled = 0, agree = 0;
      for (std::size_t p = 0; p < split.planes.size(); ++p) {
        const auto& plane = split.planes[p];
        const int count = static_cast<int>(plane.candidates.size());
        min_count = std::min(min_count, count);
        max_count = std::max(max_count, count);
        min_true = std::min(min_true, plane.true_count);
        max_true = std::max(max_true, plane.true_count);
        for (std::size_t k = 0; k < plane.candidates.size(); ++k) {
          const auto& cand = plane.candidates[k];
          if (cand.truth) {
            ++labelled;
            agree += *cand.truth == cand.on_curve ? 1 : 0;
          }
          table.add({std::to_string(p), std::to_string(k), num(cand.point[0]),
                     num(cand.point[1]), num(cand.point[2]), num(cand.point[3]),
                     cand.on_curve ? "true" : "extraneous", std::to_string(c),
                     num(plane.angle),
                     cand.third_view_residual ? num(*cand.third_view_residual) : ""});
        }
      }
      const int used = static_cast<int>(split.planes.size());
      if (used == 0) min_count = min_true = 0;
      ctx.report.metric(label + ".degree", d);
      ctx.report.metric(label + ".planes_used", used);
      ctx.report.metric(label + ".planes_skipped", static_cast<double>(split.skipped.size()));
      ctx.report.metric(label + ".expected_candidates", d * d);
      ctx.report.metric(label + ".min_candidates", min_count);
      ctx.report.metric(label + ".max_candidates", max_count);
      ctx.report.metric(label + ".min_true", min_true);
      ctx.report.metric(label + ".max_true", max_true);
      ctx.report.metric(label + ".true_points", static_cast<double>(split.true_component.size()));
      ctx.report.metric(label + ".extraneous_points",
                        static_cast<double>(split.extraneous_component.size()));
      ctx.report.metric(label + ".label_agreement",
                        labelled ? static_cast<double>(agree) / labelled : 0.0);
      ctx.report.metric(label + ".third_view", use_third ? 1.0 : 0.0);
      ctx.report.verdict(label + ".candidate_counts",
                         used > 0 && min_count == d * d && max_count == d * d);
      ctx.report.verdict(label + ".true_component",
                         used > 0 && min_true == d && max_true == d);
      ctx.report.verdict(label + ".planes", used >= 50);
      if (use_third) ctx.report.verdict(label + ".labels_match_truth", agree == labelled);
    });
  }
  ctx.report.tables.push_back(std::move(table));
}

// -------------------------------------------------------- reconstruct-dual

void cmd_reconstruct_dual(Context& ctx) {
  require_curves(ctx, "reconstruct-dual");
  const auto views = leading_views(ctx, "reconstruct-dual");
  artifacts_scene(ctx);
  const auto& opt = ctx.config.options;
  CsvTable table{"dual_heldout", {"curve_index", "sample_index", "kind", "residual"}, {}};
  json forms = json::array();
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const std::string label = key("curve", c);
    const auto& curve = ctx.scene.curves[c];
    const int m = curves::class_of(curve.degree(), 0);
    ctx.report.metric(label + ".class", m);
    ctx.report.metric(label + ".views", static_cast<double>(views.size()));
    ctx.report.metric(label + ".unknowns", recon::dual_unknowns(m));
    ctx.report.metric(label + ".view_cap", recon::dual_view_cap(m));
    ctx.report.metric(label + ".min_views_formula", recon::min_views_dual(m));
    guarded(ctx, label, [&] {
      const auto data = sample_tangent_views(curve, views, opt.samples_per_view, ctx.noise, ctx.rng);
      recon::DualSurface s;
      try {
        s = recon::dual_reconstruct(data, m);
      } catch (const RankDeficit& e) {
        ctx.report.metric(label + ".rank_deficit", e.deficit());
        ctx.report.verdict(label + ".reconstruction", false);
        ctx.report.warnings.push_back(label + ": " + e.what());
        return;
      }
      ctx.report.metric(label + ".rank_deficit", 0);
      ctx.report.verdict(label + ".reconstruction", true);
      int rmin = std::numeric_limits<int>::max(), rmax = 0;
      for (int r : s.view_ranks) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
      }
      ctx.report.metric(label + ".view_rank_min", rmin);
      ctx.report.metric(label + ".view_rank_max", rmax);
      ctx.report.metric(label + ".total_rank", s.total_rank);
      ctx.report.metric(label + ".fit_gap", s.fit_gap);
      double worst = 0.0, best_generic = kInf;
      std::vector<double> generic;
      for (int i = 0; i < opt.heldout; ++i) {
        const double theta = std::uniform_real_distribution<double>(0.0, kPi)(ctx.rng);
        const double r = recon::dual_residual(s, random_tangent_plane(curve, theta, ctx.rng));
        worst = std::max(worst, r);
        table.add({std::to_string(c), std::to_string(i), "tangent", num(r)});
      }
      for (int i = 0; i < opt.heldout; ++i) {
        const double r = recon::dual_residual(s, random_plane(ctx.rng));
        best_generic = std::min(best_generic, r);
        generic.push_back(r);
        table.add({std::to_string(c), std::to_string(i), "random", num(r)});
      }
      ctx.report.metric(label + ".heldout_residual", worst);
      ctx.report.metric(label + ".random_plane_min", best_generic);
      ctx.report.metric(label + ".random_plane_median", median(generic));
      ctx.report.metric(label + ".random_plane_fraction_separated", fraction_at_least(generic, 1e-3));
      ctx.report.verdict(label + ".view_ranks", rmin == recon::dual_view_cap(m) &&
                                                    rmax == recon::dual_view_cap(m));
      ctx.report.verdict(label + ".heldout", worst <= 1e-7);
      ctx.report.verdict(label + ".separation", median(generic) >= 1e-3);
      forms.push_back({{"curve", c}, {"degree", m}, {"Upsilon", coeffs_json(s.Upsilon.coeffs())}});
    });
  }
  ctx.report.artifacts["dual_surfaces"] = forms;
  ctx.report.tables.push_back(std::move(table));
}

// -------------------------------------------------------- reconstruct-chow

void cmd_reconstruct_chow(Context& ctx) {
  require_curves(ctx, "reconstruct-chow");
  const auto views = leading_views(ctx, "reconstruct-chow");
  artifacts_scene(ctx);
  const auto& opt = ctx.config.options;
  CsvTable table{"chow_heldout", {"curve_index", "sample_index", "kind", "residual"}, {}};
  json forms = json::array();
  for (std::size_t c = 0; c < ctx.scene.curves.size(); ++c) {
    const std::string label = key("curve", c);
    const auto& curve = ctx.scene.curves[c];
    const int d = curve.degree();
    ctx.report.metric(label + ".degree", d);
    ctx.report.metric(label + ".views", static_cast<double>(views.size()));
    ctx.report.metric(label + ".unknowns", recon::chow_unknowns(d));
    ctx.report.metric(label + ".view_cap", recon::chow_view_cap(d));
    ctx.report.metric(label + ".min_views_formula", recon::min_views_chow(d));
    guarded(ctx, label, [&] {
      const auto data = sample_point_views(curve, views, opt.samples_per_view, ctx.noise, ctx.rng);
      recon::ChowForm g;
      try {
        g = recon::chow_reconstruct(data, d);
      } catch (const RankDeficit& e) {
        ctx.report.metric(label + ".rank_deficit", e.deficit());
        ctx.report.verdict(label + ".reconstruction", false);
        ctx.report.warnings.push_back(label + ": " + e.what());
        return;
      }
      ctx.report.metric(label + ".rank_deficit", 0);
      ctx.report.verdict(label + ".reconstruction", true);
      int rmin = std::numeric_limits<int>::max(), rmax = 0;
      for (int r : g.view_ranks) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
      }
      ctx.report.metric(label + ".view_rank_min", rmin);
      ctx.report.metric(label + ".view_rank_max", rmax);
      ctx.report.metric(label + ".total_rank", g.total_rank);
      ctx.report.metric(label + ".fit_gap", g.fit_gap);
      ctx.report.metric(label + ".ideal_orthogonality", g.ideal_orthogonality);
      double worst = 0.0, best_generic = kInf;
      std::vector<double> generic;
      for (int i = 0; i < opt.heldout; ++i) {
        const double theta = std::uniform_real_distribution<double>(0.0, kPi)(ctx.rng);
        const double r = recon::chow_residual(g, random_meeting_line(curve, theta, ctx.rng));
        worst = std::max(worst, r);
        table.add({std::to_string(c), std::to_string(i), "meeting", num(r)});
      }
      for (int i = 0; i < opt.heldout; ++i) {
        const double r = recon::chow_residual(g, random_line(ctx.rng));
        best_generic = std::min(best_generic, r);
        generic.push_back(r);
        table.add({std::to_string(c), std::to_string(i), "random", num(r)});
      }
      ctx.report.metric(label + ".heldout_residual", worst);
      ctx.report.metric(label + ".random_line_min", best_generic);
      ctx.report.metric(label + ".random_line_median", median(generic));
      ctx.report.metric(label + ".random_line_fraction_separated", fraction_at_least(generic, 1e-3));
      ctx.report.verdict(label + ".view_ranks", rmin == recon::chow_view_cap(d) &&
                                                    rmax == recon::chow_view_cap(d));
      ctx.report.verdict(label + ".heldout", worst <= 1e-8);
      ctx.report.verdict(label + ".separation", median(generic) >= 1e-3);
      forms.push_back({{"curve", c}, {"degree", d}, {"Gamma", coeffs_json(g.Gamma.coeffs())}});
    });
  }
  ctx.report.artifacts["chow_forms"] = forms;
  ctx.report.tables.push_back(std::move(table));
}

// --------------------------------------------------------- classify-motion

dyn::MotionKind expected_kind(dyn::TrajectoryKind t) {
  switch (t) {
    case dyn::TrajectoryKind::kStatic: return dyn::MotionKind::kStatic;
    case dyn::TrajectoryKind::kLine: return dyn::MotionKind::kLine;
    case dyn::TrajectoryKind::kConic: return dyn::MotionKind::kConic;
    case dyn::TrajectoryKind::kTwistedCubic: return dyn::MotionKind::kCurve;
  }
  return dyn::MotionKind::kUnclassified;
}

void cmd_classify_motion(Context& ctx) {
  require_cameras(ctx, 1, "classify-motion");
  if (ctx.config.dynamic_points.empty()) {
    throw ConfigError("dynamic_points: classify-motion needs at least one dynamic point");
  }
  artifacts_scene(ctx);
  const auto& cams = ctx.scene.cams;
  const bool exact = ctx.noise == 0.0;
  CsvTable classes{"motion_classes",
                   {"point_index", "trajectory", "classified", "degree", "tolerance"}, {}};
  CsvTable located{"localized_points",
                   {"point_index", "ray_index", "x", "y", "z", "w", "violation", "ambiguous",
                    "error"},
                   {}};
  json models = json::array();
  for (std::size_t i = 0; i < ctx.config.dynamic_points.size(); ++i) {
    const DynamicPointSpec& spec = ctx.config.dynamic_points[i];
    const std::string label = key("point", i);
    guarded(ctx, label, [&] {
      std::vector<std::vector<double>> times = spec.times;
      if (times.empty()) {
        std::uniform_real_distribution<double> time(0.0, kPi);
        times.resize(cams.size());
        for (auto& t : times) {
          for (int k = 0; k < spec.frames_per_camera; ++k) t.push_back(time(ctx.rng));
        }
      }
      const dyn::DynamicScene sim =
          dyn::simulate_dynamic_scene(spec.trajectory, cams, times, ctx.noise, ctx.rng);
      const dyn::LiftResult lifted = dyn::lift_observations(cams, sim.detections);
      for (const auto& w : lifted.warnings) ctx.report.warnings.push_back(label + ": " + w);
      const auto rays = dyn::rays_of(lifted.rays);
      dyn::ClassifyOptions opts;
      opts.d_max = ctx.config.options.d_max;
      opts.tol = ctx.config.options.tol;
      opts.noise_sigma = ctx.noise;
      const dyn::MotionClass mc = dyn::classify_motion(rays, opts);
      const dyn::MotionKind want = expected_kind(spec.trajectory);
      ctx.report.metric(label + ".rays", static_cast<double>(rays.size()));
      ctx.report.metric(label + ".degree", mc.degree);
      ctx.report.metric(label + ".tolerance", mc.tolerance);
      ctx.report.verdict(label + ".classification", mc.kind == want);
      classes.add({std::to_string(i), dyn::trajectory_name(spec.trajectory),
                   dyn::motion_kind_name(mc.kind), std::to_string(mc.degree), num(mc.tolerance)});
      json model = {{"point", i}, {"class", dyn::motion_kind_name(mc.kind)}, {"degree", mc.degree}};

      if (const auto* p = std::get_if<Eigen::Vector4d>(&mc.model)) {
        const double err = linalg::projective_distance(*p, sim.static_point);
        ctx.report.metric(label + ".static_error", err);
        if (exact) ctx.report.verdict(label + ".static_point", err <= 1e-6);
        model["point"] = coeffs_json(*p);
      } else if (const auto* l = std::get_if<geom::PluckerLine>(&mc.model)) {
        const dyn::LineFit fit = dyn::recover_line_motion(rays, mc.tolerance);
        ctx.report.metric(label + ".pairing_residual", fit.pairing_residual);
        ctx.report.metric(label + ".line_error",
                          linalg::projective_distance(l->coords(), sim.line.coords()));
        if (exact) ctx.report.verdict(label + ".line", fit.pairing_residual <= 1e-7);
        model["line"] = coeffs_json(l->coords());
      } else if (std::holds_alternative<recon::ChowForm>(mc.model)) {
        const dyn::TrajectoryFit fit = dyn::recover_trajectory_chow(rays, mc.degree);
        ctx.report.metric(label + ".heldout_residual", fit.heldout_residual);
        if (exact) ctx.report.verdict(label + ".heldout", fit.heldout_residual <= 1e-7);
        model["Gamma"] = coeffs_json(fit.chow.Gamma.coeffs());
        double worst = 0.0;
        int failures = 0;
        std::map<std::pair<int, int>, Eigen::Vector4d> truth_of;
        for (std::size_t k = 0; k < sim.detections.size(); ++k) {
          truth_of[{sim.detections[k].camera_id, sim.detections[k].time_id}] = sim.positions[k];
        }
        for (std::size_t r = 0; r < lifted.rays.size(); ++r) {
          const Eigen::Vector4d& truth =
              truth_of.at({lifted.rays[r].camera_id, lifted.rays[r].time_id});
          try {
            const dyn::Localization loc =
                dyn::localize_on_ray(fit.chow, rays[r], truth, std::max(1e-7, mc.tolerance));
            const Eigen::Vector4d& x = loc.candidates.front();
            const double err = linalg::projective_distance(x, truth);
            worst = std::max(worst, err);
            located.add({std::to_string(i), std::to_string(r), num(x[0]), num(x[1]), num(x[2]),
                         num(x[3]), num(loc.violations.front()),
                         loc.ambiguous ? "true" : "false", num(err)});
          } catch (const FitError&) {
            ++failures;
          }
        }
        ctx.report.metric(label + ".localization_error", worst);
        ctx.report.metric(label + ".localization_failures", failures);
      }
      models.push_back(model);
    });
  }
  ctx.report.artifacts["motion_models"] = models;
  ctx.report.tables.push_back(std::move(classes));
  ctx.report.tables.push_back(std::move(located));
}

// ----------------------------------------------------- consistency-tables

void cmd_consistency_tables(Context& ctx) {
  std::vector<int> ds, ms;
  for (int d = ctx.d_range.first; d <= ctx.d_range.second; ++d) ds.push_back(d);
  for (int m = ctx.m_range.first; m <= ctx.m_range.second; ++m) ms.push_back(m);
  if (ds.front() < 2) throw ConfigError("options.d_range: degrees start at 2");
  if (ms.front() < 2) throw ConfigError("options.m_range: classes start at 2");
  CsvTable table{"consistency",
                 {"kind", "degree", "unknowns", "per_view_cap", "ceil_bound", "formula",
                  "consistent", "views_needed_linear"},
                 {}};
  for (const recon::CountingRow& row : recon::consistency_report(ds, ms)) {
    const std::string label = row.kind + (row.kind == "chow" ? ".d" : ".m") +
                              std::to_string(row.degree);
    ctx.report.metric(label + ".unknowns", row.unknowns);
    ctx.report.metric(label + ".per_view_cap", row.per_view_cap);
    ctx.report.metric(label + ".ceil_bound", row.ceil_bound);
    ctx.report.metric(label + ".formula", row.formula);
    ctx.report.verdict(label + ".consistent", row.consistent);
    std::string linear;
    if (row.kind == "dual") {
      linear = std::to_string(recon::min_views_dual_linear(row.degree));
      ctx.report.metric(label + ".views_needed_linear", recon::min_views_dual_linear(row.degree));
    }
    table.add({row.kind, std::to_string(row.degree), std::to_string(row.unknowns),
               std::to_string(row.per_view_cap), std::to_string(row.ceil_bound),
               std::to_string(row.formula), row.consistent ? "true" : "false", linear});
  }
  ctx.report.tables.push_back(std::move(table));
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"simulate", cmd_simulate},
      {"kruppa-check", cmd_kruppa_check},
      {"kruppa-dim", cmd_kruppa_dim},
      {"reconstruct-points", cmd_reconstruct_points},
      {"reconstruct-dual", cmd_reconstruct_dual},
      {"reconstruct-chow", cmd_reconstruct_chow},
      {"classify-motion", cmd_classify_motion},
      {"consistency-tables", cmd_consistency_tables},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "simulate",         "kruppa-check",     "kruppa-dim",      "reconstruct-points",
      "reconstruct-dual", "reconstruct-chow", "classify-motion", "consistency-tables"};
  return names;
}

std::pair<int, int> parse_range(const std::string& text, const std::string& key) {
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || v < 1) {
      throw ConfigError(key + ": expected lo..hi with positive integers, got '" + text + "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const int v = to_int(text);
    return {v, v};
  }
  const int lo = to_int(text.substr(0, dots));
  const int hi = to_int(text.substr(dots + 2));
  if (lo > hi) throw ConfigError(key + ": lo exceeds hi in '" + text + "'");
  return {lo, hi};
}

Report execute(const std::string& command, const SceneConfig& config,
               const RunFlags& flags) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) throw ConfigError("command: unknown command '" + command + "'");
  const std::uint64_t seed = flags.seed.value_or(config.seed);
  Context ctx{config, std::mt19937_64(seed), flags.noise.value_or(config.noise_sigma), {}, {},
              flags.d_range.value_or(config.options.d_range),
              flags.m_range.value_or(config.options.m_range)};
  if (ctx.noise < 0.0 || !std::isfinite(ctx.noise)) {
    throw ConfigError("noise: must be a finite non-negative number");
  }
  json inputs = {{"command", command},
                 {"config", config.canonical},
                 {"seed", seed},
                 {"noise_sigma", ctx.noise},
                 {"d_range", {ctx.d_range.first, ctx.d_range.second}},
                 {"m_range", {ctx.m_range.first, ctx.m_range.second}}};
  ctx.report.command = command;
  ctx.report.inputs_digest = sha256_hex(inputs.dump());
  ctx.report.metric("seed", static_cast<double>(seed));
  ctx.report.metric("noise_sigma", ctx.noise);
  if (command != "consistency-tables") {
    try {
      ctx.scene = realize(config, ctx.rng);
    } catch (const DegenerateGeometry& e) {
      throw ConfigError(std::string("cameras: ") + e.what());
    }
  }
  it->second(ctx);
  return std::move(ctx.report);
}

int run(const CliRequest& request) {
  Report report;
  try {
    SceneConfig config;
    if (request.config_path) {
      config = load_config(*request.config_path);
    } else if (request.command != "consistency-tables") {
      throw ConfigError("--config: required for " + request.command);
    }
    report = execute(request.command, config, request.flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    if (request.out) write_report(report, *request.out);
    if (request.csv_dir) export_csv(report, *request.csv_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (!request.out) std::cout << report.to_json().dump(2) << '\n';
  for (const auto& [key, pass] : report.verdicts) {
    if (!pass) std::cerr << "FAIL " << key << '\n';
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return report.passed() ? 0 : 1;
}

}  // namespace curvemvg::scene
