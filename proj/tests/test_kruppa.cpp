#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"

#include "curvemvg/curve.hpp"
#include "curvemvg/errors.hpp"
#include "curvemvg/kruppa.hpp"
#include "curvemvg/linalg.hpp"
#include "test_util.hpp"

using namespace curvemvg;
using namespace curvemvg::kruppa;
using curvemvg::testing::gaussian_matrix;
using curvemvg::testing::gaussian_vector;

namespace {

geom::EpipolarGeometry perturbed(const geom::EpipolarGeometry& eg, double rel,
                                 std::mt19937_64& rng) {
  Eigen::Matrix3d G = gaussian_matrix(rng, 3, 3);
  geom::EpipolarGeometry out = eg;
  out.F = eg.F + rel * eg.F.norm() * G / G.norm();
  return out;
}

ProbeLine probe_from(std::mt19937_64& rng) {
  return {gaussian_vector(rng, 3), gaussian_vector(rng, 3)};
}

struct Scene {
  geom::Camera cam1;
  geom::Camera cam2;
  std::vector<KruppaInstance> instances;
  geom::EpipolarGeometry eg;
};

Scene scene(const std::vector<curves::Preset>& presets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scene s{geom::random_camera(rng), geom::random_camera(rng), {}, {}};
  s.eg = geom::fundamental(s.cam1, s.cam2);
  int k = 0;
  for (auto p : presets) {
    s.instances.push_back(
        make_instance(curves::preset_curve(p, seed * 10 + k++), s.cam1, s.cam2));
  }
  return s;
}

}  // namespace

TEST_CASE("constraints vanish at ground truth") {
  using curves::Preset;
  std::mt19937_64 rng(40);
  for (Preset preset : {Preset::kConic, Preset::kTwistedCubic, Preset::kRationalQuartic,
                        Preset::kRationalQuintic}) {
    const curves::RationalCurve3D curve = curves::preset_curve(preset, 3);
    const int m = curves::class_of(curve.degree(), 0);
    for (int trial = 0; trial < 20; ++trial) {
      CAPTURE(curves::preset_name(preset));
      CAPTURE(trial);
      const geom::Camera cam1 = geom::random_camera(rng);
      const geom::Camera cam2 = geom::random_camera(rng);
      const KruppaInstance inst = make_instance(curve, cam1, cam2);
      CHECK(inst.class_m() == m);
      const ProbedConstraints c = gen_kruppa_constraints(inst, 1000 + trial);
      CHECK(c.values.size() == m);
      CHECK(c.values.norm() <= 1e-9);
      const auto [u, w] = restricted_forms(inst, c.probe);
      CHECK(poly::proportional(u.coeffs(), w.coeffs(), 1e-8).proportional);
    }
  }
}

TEST_CASE("constraint vector lengths") {
  CHECK(gen_kruppa_constraints(scene({curves::Preset::kConic}, 1).instances[0], 5)
            .values.size() == 2);
  CHECK(gen_kruppa_constraints(scene({curves::Preset::kTwistedCubic}, 2).instances[0], 5)
            .values.size() == 4);
}

TEST_CASE("perturbed and rank-3 F violate the constraints") {
  std::mt19937_64 rng(41);
  for (auto preset : {curves::Preset::kConic, curves::Preset::kTwistedCubic,
                      curves::Preset::kRationalQuintic}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Scene s = scene({preset}, 50 + trial);
      const ProbedConstraints truth = gen_kruppa_constraints(s.instances[0], 9);
      const KruppaInstance bad = with_geometry(s.instances[0], perturbed(s.eg, 1e-3, rng));
      CHECK(gen_kruppa_constraints(bad, truth.probe).norm() >= 1e-5);

      geom::EpipolarGeometry full = s.eg;
      full.F = gaussian_matrix(rng, 3, 3);
      full.F /= full.F.norm();
      CHECK(gen_kruppa_constraints(with_geometry(s.instances[0], full), truth.probe).norm() >=
            1e-4);
    }
  }
}

TEST_CASE("probe line validity") {
  const Scene s = scene({curves::Preset::kConic}, 3);
  std::mt19937_64 rng(42);
  ProbeLine through{s.eg.e1, gaussian_vector(rng, 3)};
  CHECK_THROWS_AS(gen_kruppa_constraints(s.instances[0], through), DegenerateGeometry);
  // A zero dual curve makes every probe line invalid, exhausting the pool.
  KruppaInstance zero = s.instances[0];
  zero.phi1.coeffs().setZero();
  CHECK_THROWS_AS(gen_kruppa_constraints(zero, std::uint64_t{1}), DegenerateGeometry);
  // Probe choice does not matter at ground truth.
  for (int i = 0; i < 5; ++i) {
    CHECK(gen_kruppa_constraints(s.instances[0], probe_from(rng)).norm() <= 1e-9);
  }
}

TEST_CASE("classical Kruppa identity") {
  SUBCASE("symmetric configuration") {
    const geom::Camera cam1(geom::Matrix34d::Identity());
    geom::Matrix34d m2 = geom::Matrix34d::Identity();
    m2(0, 3) = -1.0;
    const geom::Camera cam2(m2);
    const Eigen::Matrix3d C = Eigen::Vector3d(1, 1, -1).asDiagonal();
    CHECK(classical_kruppa_residual(geom::fundamental(cam1, cam2), C, C) <= 1e-15);
  }

  SUBCASE("ground truth and agreement with the generalized constraints") {
    std::mt19937_64 rng(43);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Scene s = scene({curves::Preset::kConic}, 200 + trial);
      const curves::RationalCurve3D conic = curves::preset_curve(curves::Preset::kConic,
                                                                 (200 + trial) * 10);
      const Eigen::Matrix3d C1 =
          curves::conic_matrix(curves::implicit_image_curve(conic, s.cam1).f);
      const Eigen::Matrix3d C2 =
          curves::conic_matrix(curves::implicit_image_curve(conic, s.cam2).f);
      const bool perturb = trial % 2 == 1;
      const geom::EpipolarGeometry eg = perturb ? perturbed(s.eg, 1e-3, rng) : s.eg;
      const double classical = classical_kruppa_residual(eg, C1, C2);
      const double general =
          gen_kruppa_constraints(with_geometry(s.instances[0], eg), std::uint64_t{7})
              .values.norm();
      if (!perturb) CHECK(classical <= 1e-9);
      if ((classical <= 1e-7) == (general <= 1e-7)) ++agree;
      CHECK((classical <= 1e-7) == !perturb);
    }
    CHECK(agree == 100);
  }

  CHECK_THROWS_AS(classical_kruppa_residual(geom::EpipolarGeometry{},
                                            Eigen::Matrix3d::Identity(),
                                            Eigen::Vector3d(1, 1, 0).asDiagonal()),
                  DegenerateGeometry);
}

TEST_CASE("tangency points") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const curves::RationalCurve3D cubic =
        curves::preset_curve(curves::Preset::kTwistedCubic, 60 + trial);
    const geom::Camera cam1 = geom::random_camera(rng);
    const geom::Camera cam2 = geom::random_camera(rng);
    const geom::EpipolarGeometry eg = geom::fundamental(cam1, cam2);
    const KruppaInstance inst = make_instance(cubic, cam1, cam2);
    const TangencyData td = tangency_points(cubic, cam1, cam2);
    CHECK(td.expected == 4);
    CHECK(td.deficit() >= 0);
    CHECK(td.deficit() % 2 == 0);
    CHECK(td.q1.size() == td.q2.size());
    for (std::size_t a = 0; a < td.Q.size(); ++a) {
      const Eigen::Vector4d X = cubic.point(td.thetas[a]);
      CHECK(linalg::projective_distance(td.Q[a], X) <= 1e-12);
      Eigen::Matrix4d plane;
      plane << cam1.center(), cam2.center(), X.normalized(),
          cubic.derivative(td.thetas[a]).normalized();
      CHECK(std::abs(plane.determinant()) <= 1e-10);
      CHECK(std::abs(td.q2[a].dot(eg.F * td.q1[a])) <= 1e-10);
      // The epipolar lines through q1, q2 are tangent to the image curves.
      const Eigen::Vector3d l1 = eg.e1.cross(td.q1[a]).normalized();
      const Eigen::Vector3d l2 = (eg.F * td.q1[a]).normalized();
      CHECK(std::abs(inst.phi1(l1)) <= 1e-8);
      CHECK(std::abs(inst.phi2(l2)) <= 1e-8);
    }
  }
}

TEST_CASE("quadric degeneracy") {
  std::mt19937_64 rng(45);
  const geom::PluckerLine line = geom::PluckerLine::join(gaussian_vector(rng, 4),
                                                         gaussian_vector(rng, 4));
  auto random_points = [&](int n) {
    std::vector<Eigen::Vector4d> pts;
    for (int i = 0; i < n; ++i) pts.push_back(gaussian_vector(rng, 4));
    return pts;
  };
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(quadric_degeneracy(line, random_points(6)));
    CHECK_FALSE(quadric_degeneracy(line, random_points(7)));
  }

  // Seven points on a quadric that contains the line.
  const auto [a, b] = line.points();
  Eigen::Matrix4d basis;
  basis << a, b, gaussian_vector(rng, 4), gaussian_vector(rng, 4);
  Eigen::Matrix4d S = gaussian_matrix(rng, 4, 4);
  S = S + S.transpose().eval();
  S(0, 0) = S(0, 1) = S(1, 0) = S(1, 1) = 0.0;  // vanishes on span(e0, e1)
  const Eigen::Matrix4d inv = basis.inverse();
  const Eigen::Matrix4d Q = inv.transpose() * S * inv;
  CHECK(std::abs(a.transpose() * Q * a) <= 1e-9 * Q.norm() * a.squaredNorm());
  std::vector<Eigen::Vector4d> on_quadric;
  while (on_quadric.size() < 7) {
    const Eigen::Vector4d x = gaussian_vector(rng, 4);
    const Eigen::Vector4d y = gaussian_vector(rng, 4);
    // (x + t y)^T Q (x + t y) = 0
    const double qa = y.dot(Q * y), qb = 2.0 * x.dot(Q * y), qc = x.dot(Q * x);
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) continue;
    const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
    on_quadric.push_back(x + t * y);
  }
  CHECK(quadric_degeneracy(line, on_quadric));
}

TEST_CASE("solution dimension") {
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
  for (const Case& c : cases) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      CAPTURE(c.sum_m);
      CAPTURE(seed);
      const Scene s = scene(c.presets, seed);
      const DimensionEstimate est = solution_dimension(s.instances, s.eg);
      CAPTURE(est.singular_values.transpose());
      CHECK(est.dimension == std::max(7 - c.sum_m, 0));
      CHECK_FALSE(est.indeterminate);
      CHECK(est.gap_ratio >= 10.0);
    }
  }
}

TEST_CASE("refine epipolar geometry") {
  using curves::Preset;
  std::mt19937_64 rng(46);

  SUBCASE("conic and quintic recover the truth") {
    for (std::uint64_t seed : {4u, 5u, 6u}) {
      const Scene s = scene({Preset::kConic, Preset::kRationalQuintic}, seed);
      const RefineResult r = refine_epipolar(perturbed(s.eg, 1e-3, rng), s.instances);
      CAPTURE(r.residual);
      CHECK(r.converged);
      CHECK(r.residual <= 1e-8);
      CHECK(linalg::abs_cosine(r.eg.F.reshaped(), s.eg.F.reshaped()) >= 1.0 - 1e-6);
    }
  }

  SUBCASE("truth is a fixed point") {
    const Scene s = scene({Preset::kConic, Preset::kRationalQuintic}, 7);
    const RefineResult r = refine_epipolar(s.eg, s.instances);
    CHECK(r.iterations == 0);
    CHECK(r.converged);
  }

  SUBCASE("six conditions leave a one-dimensional family") {
    // First scene whose truth is a well-conditioned point of the family.
    std::uint64_t seed = 8;
    while (true) {
      const Scene t = scene({Preset::kConic, Preset::kTwistedCubic}, seed);
      const DimensionEstimate est = solution_dimension(t.instances, t.eg);
      if (est.singular_values[5] > 1e-3 * est.singular_values[0]) break;
      ++seed;
    }
    CAPTURE(seed);
    const Scene s = scene({Preset::kConic, Preset::kTwistedCubic}, seed);
    const RefineResult r = refine_epipolar(perturbed(s.eg, 1e-2, rng), s.instances);
    CHECK(r.residual <= 1e-8);
    // A different solution: it satisfies every constraint but is not the truth.
    CHECK(linalg::abs_cosine(r.eg.F.reshaped(), s.eg.F.reshaped()) < 1.0 - 1e-8);
    std::vector<KruppaInstance> moved;
    for (const auto& inst : s.instances) moved.push_back(with_geometry(inst, r.eg));
    CHECK(solution_dimension(moved, r.eg).dimension == 1);
  }
}
