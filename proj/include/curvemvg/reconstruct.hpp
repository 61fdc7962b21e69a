#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curvemvg/camera.hpp"
#include "curvemvg/curve.hpp"
#include "curvemvg/polynomial.hpp"

namespace curvemvg::recon {

// Cone over the image curve with apex at the camera center.
struct Cone {
  poly::HomogeneousPolynomial Delta{4, 0};  // 4 variables, degree d
};

Cone cone(const curves::ImageCurve& f, const geom::Camera& cam);

// |Delta(P)| for unit P and unit-norm Delta.
double cone_residual(const Cone& c, const Eigen::Vector4d& point);

// Candidate point from one pairing of image points on corresponding
// epipolar lines.
struct Candidate {
  Eigen::Vector4d point;  // unit norm
  int index1 = 0;         // root index on the epipolar line in view 1
  int index2 = 0;         // root index in view 2
  // Label from the third view (or ground truth if no third view is given).
  bool on_curve = false;
  // Label from ground truth when the curve is known.
  std::optional<bool> truth;
  // |f3(M3 P)| / |grad f3| at the reprojection, when a third view is given.
  std::optional<double> third_view_residual;
};

struct PlaneRecord {
  double angle = 0.0;  // pencil parameter in [0, pi)
  Eigen::Vector4d plane;
  std::vector<Candidate> candidates;
  int true_count = 0;
  int extraneous_count = 0;
};

struct SkippedPlane {
  double angle = 0.0;
  std::string reason;
};

struct ComponentSplit {
  std::vector<PlaneRecord> planes;
  std::vector<SkippedPlane> skipped;
  std::vector<Eigen::Vector4d> true_component;
  std::vector<Eigen::Vector4d> extraneous_component;
};

struct ThirdView {
  const curves::ImageCurve* f = nullptr;
  const geom::Camera* cam = nullptr;
  double tolerance = 1e-9;
};

struct SweepOptions {
  int n_planes = 100;
  // Root collisions closer than this (chordal) mark a tangent plane.
  double tangency_tolerance = 1e-7;
  // Imaginary parts below this (relative) count as real roots.
  double real_tolerance = 1e-8;
  // Ground-truth curve for synthetic labelling (projective distance 1e-6).
  const curves::RationalCurve3D* truth = nullptr;
  std::optional<ThirdView> third_view;
};

// Sweeps planes through the baseline. On each plane every pairing of the d
// curve points on the two epipolar lines is triangulated. Planes meeting
// the curve in non-real points or tangent to it are skipped and listed.
ComponentSplit epipolar_sweep(const curves::ImageCurve& f1,
                              const curves::ImageCurve& f2,
                              const geom::Camera& cam1,
                              const geom::Camera& cam2,
                              const SweepOptions& options);

// Real roots (t, s) on the unit circle of a binary form, or nullopt when a
// root is not real. Throws DegenerateGeometry on a double root.
std::optional<std::vector<Eigen::Vector2d>> real_binary_roots(
    const poly::HomogeneousPolynomial& form, double real_tolerance,
    double collision_tolerance);

struct ViewLines {
  geom::Camera cam;
  std::vector<Eigen::Vector3d> lines;
};

struct ViewPoints {
  geom::Camera cam;
  std::vector<Eigen::Vector3d> points;
};

struct DualSurface {
  poly::HomogeneousPolynomial Upsilon{4, 0};  // 4 dual variables, degree m
  std::vector<int> view_ranks;
  int total_rank = 0;
  double fit_gap = 0.0;
};

// Linear recovery of the dual surface of degree m from tangent lines.
// Throws RankDeficit when the stacked rows have rank below C(m+3,3) - 1.
DualSurface dual_reconstruct(const std::vector<ViewLines>& views, int m);

// |Upsilon(plane)| for unit plane and unit-norm Upsilon.
double dual_residual(const DualSurface& s, const Eigen::Vector4d& plane);

struct ChowForm {
  poly::HomogeneousPolynomial Gamma{6, 0};  // 6 Plucker variables, degree d
  std::vector<int> view_ranks;
  int total_rank = 0;
  double fit_gap = 0.0;
  // max |<Gamma, b>| over the unit basis vectors b of the ideal piece
  double ideal_orthogonality = 0.0;
};

// Basis {monomial of degree d-2 times the Grassmann quadric} of the degree-d
// piece of the ideal of G(1,3), as coefficient vectors in MonomialBasis(6, d).
std::vector<Eigen::VectorXd> grassmann_ideal_basis(int d);

// Number of unknowns: C(d+5,5) - C(d+3,5).
int chow_unknowns(int d);

// Linear recovery of the Chow form of a degree-d curve from image points.
// Throws RankDeficit naming the per-view ranks when the system is short.
ChowForm chow_reconstruct(const std::vector<ViewPoints>& views, int d);

// Fitting core shared with trajectory recovery: rows Gamma(L) = 0 for the
// given lines plus orthogonality to the ideal piece. view_ranks stays empty.
ChowForm chow_fit_lines(const std::vector<geom::Vector6d>& lines, int d);

// |Gamma(L)| for unit L and unit-norm Gamma.
double chow_residual(const ChowForm& g, const geom::PluckerLine& line);

// Gamma vanishes (<= 1e-7) on `trials` random lines through P.
bool chow_membership(const ChowForm& g, const Eigen::Vector4d& point,
                     int trials = 5, std::uint64_t seed = 1);

int min_views_dual(int m);
// Views needed for a unique linear solution: m + 1. With k <= m views every
// multiple of the product of the center forms (pi . O_i) also vanishes on
// all tangent planes through the centers.
int min_views_dual_linear(int m);
int min_views_chow(int d);
int dual_view_cap(int m);  // C(m+2,2) - 1
int chow_view_cap(int d);  // d(d+3)/2
int dual_unknowns(int m);  // C(m+3,3)

struct CountingRow {
  std::string kind;  // "dual" or "chow"
  int degree = 0;    // m or d
  int unknowns = 0;
  int per_view_cap = 0;
  int ceil_bound = 0;    // ceil((unknowns - 1) / cap)
  int formula = 0;       // min_views_dual / min_views_chow
  bool consistent = false;
};

std::vector<CountingRow> consistency_report(const std::vector<int>& ds,
                                            const std::vector<int>& ms);

}  // namespace curvemvg::recon
