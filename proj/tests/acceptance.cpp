// Acceptance suite: one line per criterion.
//
//   acceptance            exit 0 when every criterion passes or fails only
//                         as recorded in kKnownDeviations
//   acceptance --strict   exit 0 only when every criterion passes

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvemvg/camera.hpp"
#include "curvemvg/commands.hpp"
#include "curvemvg/curve.hpp"
#include "curvemvg/dynamics.hpp"
#include "curvemvg/errors.hpp"
#include "curvemvg/kruppa.hpp"
#include "curvemvg/linalg.hpp"
#include "curvemvg/reconstruct.hpp"
#include "curvemvg/scene.hpp"

using namespace curvemvg;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  // The failure matches the recorded deviation exactly.
  bool known_deviation = false;
  std::string summary;
};

class Notes {
 public:
  template <typename T>
  Notes& operator()(const std::string& key, const T& value) {
    std::ostringstream s;
    s.precision(3);
    s << value;
    parts_.push_back(key + "=" + s.str());
    return *this;
  }
  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < parts_.size(); ++i) out += (i ? " " : "") + parts_[i];
    return out;
  }

 private:
  std::vector<std::string> parts_;
};

Eigen::Vector4d gaussian4(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng), n(rng), n(rng)};
}

std::vector<geom::Camera> cameras(std::mt19937_64& rng, int n) {
  std::vector<geom::Camera> out;
  for (int i = 0; i < n; ++i) out.push_back(geom::random_camera(rng));
  return out;
}

double uniform_theta(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, kPi)(rng);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------------ 1

Outcome epipolar_algebra() {
  std::mt19937_64 rng(101);
  double rank3 = 0.0, right = 0.0, left = 0.0, fh = 0.0, he = 0.0, match = 0.0;
  double rank2_min = 1.0, cross = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const geom::Camera c1 = geom::random_camera(rng), c2 = geom::random_camera(rng);
    const geom::EpipolarGeometry eg = geom::fundamental(c1, c2);
    const geom::EpipolarResiduals r = geom::epipolar_residuals(eg);
    const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(eg.F).singularValues();
    rank3 = std::max(rank3, r.rank3);
    rank2_min = std::min(rank2_min, s[1] / s[0]);
    right = std::max(right, r.right);
    left = std::max(left, r.left);
    const geom::Plane3 delta{gaussian4(rng)};
    const Eigen::Matrix3d H = geom::homography(c1, c2, delta);
    const Eigen::Matrix3d sym = H.transpose() * eg.F + eg.F.transpose() * H;
    fh = std::max(fh, sym.norm() / (H.norm() * eg.F.norm()));
    he = std::max(he, linalg::projective_distance(H * eg.e1, eg.e2));
    cross = std::max(cross, linalg::projective_distance(
                                eg.F.reshaped(), (linalg::skew(eg.e2) * H).reshaped()));
    for (int i = 0; i < 10; ++i) {
      const Eigen::Vector4d P = gaussian4(rng);
      const Eigen::Vector3d p1 = c1.project(P).normalized(), p2 = c2.project(P).normalized();
      match = std::max(match, std::abs(p2.dot(eg.F * p1)));
    }
  }
  Outcome o;
  o.pass = rank3 <= 1e-10 && rank2_min >= 1e-6 && right <= 1e-10 && left <= 1e-10 &&
           fh <= 1e-9 && he <= 1e-9 && cross <= 1e-9 && match <= 1e-10;
  o.summary = Notes()("pairs", 100)("sigma3/sigma1", rank3)("|Fe1|", right)("|e2'F|", left)(
                  "HtF+FtH", fh)("H*e1~e2", he)("F~[e2]xH", cross)("p2'Fp1", match)
                  .str();
  return o;
}

// ------------------------------------------------------------------ 2

Outcome generalized_kruppa() {
  std::mt19937_64 rng(202);
  double truth = 0.0, perturbed = 1e300, classical = 0.0;
  int instances = 0;
  for (auto preset : {curves::Preset::kConic, curves::Preset::kTwistedCubic,
                      curves::Preset::kRationalQuintic}) {
    for (int trial = 0; trial < 10; ++trial) {
      const geom::Camera c1 = geom::random_camera(rng), c2 = geom::random_camera(rng);
      const auto curve = curves::preset_curve(preset, rng());
      const kruppa::KruppaInstance inst = kruppa::make_instance(curve, c1, c2);
      const kruppa::ProbedConstraints pc = kruppa::gen_kruppa_constraints(inst, rng());
      truth = std::max(truth, pc.values.norm());
      Eigen::Matrix3d g;
      std::normal_distribution<double> n(0.0, 1.0);
      for (int i = 0; i < 9; ++i) g(i) = n(rng);
      geom::EpipolarGeometry bad = inst.eg;
      bad.F += 1e-3 * inst.eg.F.norm() * g / g.norm();
      perturbed = std::min(perturbed, kruppa::gen_kruppa_constraints(
                                          kruppa::with_geometry(inst, bad), pc.probe)
                                          .norm());
      if (preset == curves::Preset::kConic) {
        const Eigen::Matrix3d C1 = curves::conic_matrix(curves::implicit_image_curve(curve, c1).f);
        const Eigen::Matrix3d C2 = curves::conic_matrix(curves::implicit_image_curve(curve, c2).f);
        classical = std::max(classical, kruppa::classical_kruppa_residual(inst.eg, C1, C2));
      }
      ++instances;
    }
  }
  Outcome o;
  o.pass = truth <= 1e-9 && perturbed >= 1e-5 && classical <= 1e-9;
  o.summary = Notes()("scenes", instances)("max_truth_norm", truth)(
                  "min_perturbed_norm", perturbed)("max_classical_residual", classical)
                  .str();
  return o;
}

// ------------------------------------------------------------------ 3

Outcome dimension_theorem() {
  using curves::Preset;
  struct Case {
    std::vector<Preset> presets;
    int sum_m;
  };
  const std::vector<Case> cases = {
      {{Preset::kConic}, 2},
      {{Preset::kTwistedCubic}, 4},
      {{Preset::kConic, Preset::kTwistedCubic}, 6},
      {{Preset::kTwistedCubic, Preset::kTwistedCubic}, 8},
      {{Preset::kConic, Preset::kRationalQuintic}, 10},
  };
  std::mt19937_64 rng(303);
  bool ok = true;
  double min_gap = std::numeric_limits<double>::infinity();
  double min_kept = 1.0;
  std::string dims;
  for (const Case& c : cases) {
    std::set<int> seen;
    for (int trial = 0; trial < 10; ++trial) {
      const geom::Camera c1 = geom::random_camera(rng), c2 = geom::random_camera(rng);
      std::vector<kruppa::KruppaInstance> inst;
      for (Preset p : c.presets) {
        inst.push_back(kruppa::make_instance(curves::preset_curve(p, rng()), c1, c2));
      }
      const kruppa::DimensionEstimate est =
          kruppa::solution_dimension(inst, geom::fundamental(c1, c2));
      seen.insert(est.dimension);
      ok = ok && est.dimension == std::max(7 - c.sum_m, 0) && !est.indeterminate &&
           est.gap_ratio >= 10.0 &&
           (est.rank == 0 || est.singular_values[est.rank - 1] > 1e-6 * est.singular_values[0]);
      min_gap = std::min(min_gap, est.gap_ratio);
      if (est.rank > 0) {
        min_kept = std::min(min_kept, est.singular_values[est.rank - 1] / est.singular_values[0]);
      }
    }
    dims += (dims.empty() ? "" : ",") + std::to_string(*seen.begin());
    if (seen.size() > 1) dims += "?";
  }

  // Quadrics through the baseline: 7 dimensions, so six points always fit
  // and seven generic points do not.
  int six = 0, seven = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const geom::PluckerLine baseline = geom::PluckerLine::join(gaussian4(rng), gaussian4(rng));
    std::vector<Eigen::Vector4d> pts;
    for (int i = 0; i < 7; ++i) pts.push_back(gaussian4(rng));
    six += kruppa::quadric_degeneracy(baseline, {pts.begin(), pts.begin() + 6}) ? 1 : 0;
    seven += kruppa::quadric_degeneracy(baseline, pts) ? 0 : 1;
  }
  Outcome o;
  o.pass = ok && six == 20 && seven == 20;
  o.summary = Notes()("dims(sum_m=2,4,6,8,10)", dims)("min_gap_ratio", min_gap)("min_kept/max", min_kept)(
                  "degenerate_at_6", std::to_string(six) + "/20")(
                  "generic_at_7", std::to_string(seven) + "/20")
                  .str();
  return o;
}

// ------------------------------------------------------------------ 4

Outcome two_components() {
  std::mt19937_64 rng(404);
  bool ok = true;
  int min_planes = 1 << 30, scenes = 0;
  long long labelled = 0, agree = 0;
  for (auto preset : {curves::Preset::kConic, curves::Preset::kTwistedCubic}) {
    int found = 0;
    for (int trial = 0; trial < 20 && found < 3; ++trial) {
      const auto cams = cameras(rng, 3);
      const auto curve = curves::preset_curve(preset, rng());
      const int d = curve.degree();
      const auto f1 = curves::implicit_image_curve(curve, cams[0]);
      const auto f2 = curves::implicit_image_curve(curve, cams[1]);
      const auto f3 = curves::implicit_image_curve(curve, cams[2]);
      recon::SweepOptions opts;
      opts.n_planes = 400;
      opts.truth = &curve;
      opts.third_view = recon::ThirdView{&f3, &cams[2]};
      recon::ComponentSplit split;
      try {
        split = recon::epipolar_sweep(f1, f2, cams[0], cams[1], opts);
      } catch (const DegenerateGeometry&) {
        continue;
      }
      // planes with non-real intersections carry no real candidates
      if (split.planes.size() < 50) continue;
      ++found;
      ++scenes;
      min_planes = std::min<int>(min_planes, static_cast<int>(split.planes.size()));
      for (const auto& plane : split.planes) {
        ok = ok && static_cast<int>(plane.candidates.size()) == d * d &&
             plane.true_count == d && plane.extraneous_count == d * (d - 1);
        for (const auto& c : plane.candidates) {
          ++labelled;
          agree += c.truth && *c.truth == c.on_curve ? 1 : 0;
        }
      }
    }
    ok = ok && found == 3;
  }
  Outcome o;
  o.pass = ok && agree == labelled && min_planes >= 50;
  o.summary = Notes()("scenes", scenes)("min_planes", min_planes)(
                  "counts", "d^2 with d true per plane")(
                  "third_view_agreement", std::to_string(agree) + "/" + std::to_string(labelled))
                  .str();
  if (!ok) o.summary += " count_mismatch";
  return o;
}

// ------------------------------------------------------------------ 5

Outcome dual_reconstruction() {
  std::mt19937_64 rng(505);
  const int m = 4;
  const auto curve = curves::preset_curve(curves::Preset::kTwistedCubic, 9);
  const auto cams = cameras(rng, 5);
  const auto views = scene::sample_tangent_views(curve, cams, 20, 0.0, rng);

  bool ranks_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const auto one = scene::sample_tangent_views(curve, cameras(rng, 1), 20, 0.0, rng);
    try {
      recon::dual_reconstruct(one, m);
    } catch (const RankDeficit& e) {
      ranks_ok = ranks_ok && e.deficit() == recon::dual_unknowns(m) - 1 - 14;
    }
  }
  auto attempt = [&](int k, int& deficit, double& heldout) {
    deficit = 0;
    heldout = -1.0;
    try {
      const recon::DualSurface s =
          recon::dual_reconstruct({views.begin(), views.begin() + k}, m);
      for (int r : s.view_ranks) ranks_ok = ranks_ok && r == 14;
      heldout = 0.0;
      for (int i = 0; i < 100; ++i) {
        heldout = std::max(heldout, recon::dual_residual(
                                        s, scene::random_tangent_plane(curve, uniform_theta(rng), rng)));
      }
      return true;
    } catch (const RankDeficit& e) {
      deficit = e.deficit();
      return false;
    }
  };
  const int kmin = recon::min_views_dual(m);
  int def2 = 0, def_min = 0, def_lin = 0;
  double h2 = 0, h_min = 0, h_lin = 0;
  const bool two = attempt(2, def2, h2);
  const bool at_min = attempt(kmin, def_min, h_min);
  const bool linear = attempt(recon::min_views_dual_linear(m), def_lin, h_lin);

  Outcome o;
  const bool min_ok = at_min && h_min <= 1e-7;
  o.pass = ranks_ok && recon::dual_view_cap(m) == 14 && !two && def2 > 0 && min_ok;
  // C(m - k + 3, 3) spurious forms vanish on every view when k <= m.
  o.known_deviation = !o.pass && ranks_ok && !two && def2 == 10 && kmin == 3 && !at_min &&
                      def_min == 4 && linear && h_lin <= 1e-7;
  o.summary = Notes()("per_view_rank", ranks_ok ? "14" : "mismatch")("views_2", two ? "ok" : "deficit=" + std::to_string(def2))(
                  "views_" + std::to_string(kmin), at_min ? "ok" : "deficit=" + std::to_string(def_min))(
                  "views_" + std::to_string(recon::min_views_dual_linear(m)),
                  linear ? "ok" : "deficit=" + std::to_string(def_lin))(
                  "heldout_at_m+1", h_lin)
                  .str();
  return o;
}

// ------------------------------------------------------------------ 6

Outcome chow_reconstruction() {
  std::mt19937_64 rng(606);
  struct Run {
    bool ok = false;
    int deficit = 0;
    std::vector<int> ranks;
    double heldout = -1.0;
    double separation = 0.0;
  };
  auto attempt = [&](const curves::RationalCurve3D& curve,
                     const std::vector<recon::ViewPoints>& views, int k) {
    Run r;
    try {
      const recon::ChowForm g =
          recon::chow_reconstruct({views.begin(), views.begin() + k}, curve.degree());
      r.ok = true;
      r.ranks = g.view_ranks;
      r.heldout = 0.0;
      for (int i = 0; i < 100; ++i) {
        r.heldout = std::max(r.heldout, recon::chow_residual(
                                            g, scene::random_meeting_line(curve, uniform_theta(rng), rng)));
      }
      std::vector<double> random;
      for (int i = 0; i < 100; ++i) random.push_back(recon::chow_residual(g, scene::random_line(rng)));
      r.separation = median(random);
    } catch (const RankDeficit& e) {
      r.deficit = e.deficit();
    }
    return r;
  };
  const auto conic = curves::preset_curve(curves::Preset::kConic, 11);
  const auto cubic = curves::preset_curve(curves::Preset::kTwistedCubic, 12);
  const auto conic_views = scene::sample_point_views(conic, cameras(rng, 5), 12, 0.0, rng);
  const auto cubic_views = scene::sample_point_views(cubic, cameras(rng, 8), 20, 0.0, rng);

  const Run c3 = attempt(conic, conic_views, 3);
  const Run c4 = attempt(conic, conic_views, recon::min_views_chow(2));
  const Run c5 = attempt(conic, conic_views, 5);
  const Run k6 = attempt(cubic, cubic_views, recon::min_views_chow(3));
  const Run k8 = attempt(cubic, cubic_views, 8);

  auto ranks_equal = [](const Run& r, int cap) {
    return r.ok && std::all_of(r.ranks.begin(), r.ranks.end(), [&](int x) { return x == cap; });
  };
  bool consistent = true;
  for (const auto& row : recon::consistency_report({2, 3, 4}, {2, 4, 6})) {
    consistent = consistent && row.consistent;
  }
  const bool counts = recon::chow_unknowns(2) == 20 && recon::chow_unknowns(3) == 50 &&
                      recon::chow_view_cap(2) == 5 && recon::chow_view_cap(3) == 9 &&
                      recon::min_views_chow(2) == 4 && recon::min_views_chow(3) == 6;
  const bool quality = ranks_equal(c5, 5) && ranks_equal(k8, 9) && c5.heldout <= 1e-8 &&
                       k8.heldout <= 1e-8 && c5.separation >= 1e-3 && k8.separation >= 1e-3;
  Outcome o;
  o.pass = counts && consistent && !c3.ok && c4.ok && k6.ok && c4.heldout <= 1e-8 &&
           k6.heldout <= 1e-8 && quality;
  o.known_deviation = !o.pass && counts && consistent && quality && !c3.ok &&
                      !c4.ok && c4.deficit == 2 && !k6.ok && k6.deficit == 5;
  auto status = [](const Run& r) { return r.ok ? std::string("ok") : "deficit=" + std::to_string(r.deficit); };
  o.summary = Notes()("unknowns", "20/50")("per_view_rank", quality ? "5/9" : "mismatch")(
                  "conic_3", status(c3))("conic_4", status(c4))("conic_5", status(c5))(
                  "cubic_6", status(k6))("cubic_8", status(k8))(
                  "heldout", std::max(c5.heldout, k8.heldout))(
                  "random_median", std::min(c5.separation, k8.separation))(
                  "consistency_report", consistent ? "ok" : "mismatch")
                  .str();
  return o;
}

// ------------------------------------------------------------------ 7

Outcome dynamics() {
  using dyn::TrajectoryKind;
  const std::vector<std::pair<TrajectoryKind, dyn::MotionKind>> classes = {
      {TrajectoryKind::kStatic, dyn::MotionKind::kStatic},
      {TrajectoryKind::kLine, dyn::MotionKind::kLine},
      {TrajectoryKind::kConic, dyn::MotionKind::kConic},
      {TrajectoryKind::kTwistedCubic, dyn::MotionKind::kCurve}};
  std::mt19937_64 rng(707);
  int exact_correct = 0, noisy_correct = 0, total = 0;
  double static_err = 0.0, pairing = 0.0, heldout = 0.0;
  for (const auto& [kind, expected] : classes) {
    for (int trial = 0; trial < 100; ++trial) {
      const dyn::DynamicScene s = dyn::simulate_dynamic_scene(kind, 10, 15, 0.0, rng);
      const auto rays = dyn::rays_of(dyn::lift_observations(s.cams, s.detections).rays);
      const dyn::MotionClass mc = dyn::classify_motion(rays);
      ++total;
      if (mc.kind == expected && (expected != dyn::MotionKind::kCurve || mc.degree == 3)) {
        ++exact_correct;
      }
      if (const auto* p = std::get_if<Eigen::Vector4d>(&mc.model)) {
        static_err = std::max(static_err, linalg::projective_distance(*p, s.static_point));
      } else if (std::holds_alternative<geom::PluckerLine>(mc.model)) {
        pairing = std::max(pairing, dyn::recover_line_motion(rays).pairing_residual);
      } else if (std::holds_alternative<recon::ChowForm>(mc.model)) {
        heldout = std::max(heldout, dyn::recover_trajectory_chow(rays, mc.degree).heldout_residual);
      }

      const dyn::DynamicScene n = dyn::simulate_dynamic_scene(kind, 10, 15, 1e-3, rng);
      dyn::ClassifyOptions opts;
      opts.noise_sigma = 1e-3;
      const dyn::MotionClass nc = dyn::classify_motion(
          dyn::rays_of(dyn::lift_observations(n.cams, n.detections).rays), opts);
      if (nc.kind == expected) ++noisy_correct;
    }
  }
  Outcome o;
  const double noisy_rate = static_cast<double>(noisy_correct) / total;
  o.pass = exact_correct == total && noisy_rate >= 0.95 && static_err <= 1e-6 &&
           pairing <= 1e-7 && heldout <= 1e-7;
  o.summary = Notes()("exact", std::to_string(exact_correct) + "/" + std::to_string(total))(
                  "noise_1e-3", std::to_string(noisy_correct) + "/" + std::to_string(total))(
                  "static_err", static_err)("line_pairing", pairing)("chow_heldout", heldout)
                  .str();
  return o;
}

// ------------------------------------------------------------------ 8

Outcome determinism() {
  const std::filesystem::path dir = CURVEMVG_SCENES_DIR;
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"simulate", "simulate"},
      {"kruppa-check", "conic_pair"},
      {"kruppa-dim", "kruppa_dim"},
      {"reconstruct-points", "sweep"},
      {"reconstruct-dual", "dual_cubic"},
      {"reconstruct-chow", "chow_cubic"},
      {"classify-motion", "dynamics"},
      {"consistency-tables", "consistency"}};
  int same = 0, noisy_same = 0;
  for (const auto& [command, name] : runs) {
    const scene::SceneConfig cfg = scene::load_config(dir / (name + ".json"));
    same += scene::execute(command, cfg).digest() == scene::execute(command, cfg).digest();
    scene::RunFlags flags;
    flags.noise = 1e-4;
    flags.seed = 99;
    noisy_same += scene::execute(command, cfg, flags).digest() ==
                  scene::execute(command, cfg, flags).digest();
  }
  const int n = static_cast<int>(runs.size());
  Outcome o;
  o.pass = same == n && noisy_same == n;
  o.summary = Notes()("commands", n)("identical_digests", std::to_string(same) + "/" + std::to_string(n))(
                  "identical_with_noise", std::to_string(noisy_same) + "/" + std::to_string(n))
                  .str();
  return o;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

// Criteria whose stated view counts are below what the linear systems need.
const std::map<int, std::string> kKnownDeviations = {
    {5, "min_views_dual(4)=3 leaves a rank deficit of 4; m+1 views are needed"},
    {6, "min_views_chow gives 4 (d=2) and 6 (d=3); 5 and 8 views are needed"},
};

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<Criterion> criteria = {
      {1, "epipolar algebra", epipolar_algebra},
      {2, "generalized Kruppa constraints", generalized_kruppa},
      {3, "dimension of the solution set", dimension_theorem},
      {4, "two-component point reconstruction", two_components},
      {5, "dual-space reconstruction", dual_reconstruction},
      {6, "Chow-form reconstruction", chow_reconstruction},
      {7, "dynamic point classification", dynamics},
      {8, "report determinism", determinism},
  };
  int passed = 0, known = 0, unexpected = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.known_deviation = false;
      o.summary = std::string("exception: ") + e.what();
    }
    std::string tag = o.pass ? "PASS" : "FAIL";
    if (!o.pass) {
      const auto it = kKnownDeviations.find(c.id);
      if (it != kKnownDeviations.end() && o.known_deviation) {
        tag += " (known deviation: " + it->second + ")";
        ++known;
      } else {
        ++unexpected;
      }
    } else {
      ++passed;
    }
    std::printf("[%s] criterion %d %s: %s\n", tag.c_str(), c.id, c.name.c_str(),
                o.summary.c_str());
    std::fflush(stdout);
  }
  std::printf("summary: %d passed, %d failed as known deviations, %d failed unexpectedly\n",
              passed, known, unexpected);
  if (strict) return passed == static_cast<int>(criteria.size()) ? 0 : 1;
  return unexpected == 0 ? 0 : 1;
}
