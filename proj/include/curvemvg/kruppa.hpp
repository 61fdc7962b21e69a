#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "curvemvg/camera.hpp"
#include "curvemvg/curve.hpp"
#include "curvemvg/polynomial.hpp"

namespace curvemvg::kruppa {

// Dual image curves of one space curve in two views, together with the
// epipolar geometry relating the views.
struct KruppaInstance {
  poly::HomogeneousPolynomial phi1;
  poly::HomogeneousPolynomial phi2;
  geom::EpipolarGeometry eg;

  int class_m() const { return phi1.degree(); }
  // p -> e1 x p
  Eigen::Matrix3d gamma() const;
  // p -> F p
  Eigen::Matrix3d xi() const { return eg.F; }
};

// Throws DimensionMismatch if the dual curves differ in degree.
KruppaInstance make_instance(poly::HomogeneousPolynomial phi1,
                             poly::HomogeneousPolynomial phi2,
                             const geom::EpipolarGeometry& eg);

// Fits both dual image curves of `curve` and pairs them with the true
// epipolar geometry of the cameras.
KruppaInstance make_instance(const curves::RationalCurve3D& curve,
                             const geom::Camera& cam1,
                             const geom::Camera& cam2);

// Same instance with the epipolar geometry replaced.
KruppaInstance with_geometry(const KruppaInstance& inst,
                             const geom::EpipolarGeometry& eg);

// Line of P^2 through image points a and b, parametrized as t a + s b.
struct ProbeLine {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

// Both sides of the Kruppa proportionality restricted to the probe line:
// first = phi2(F p), second = phi1(e1 x p), binary forms of degree m.
std::pair<poly::HomogeneousPolynomial, poly::HomogeneousPolynomial>
restricted_forms(const KruppaInstance& inst, const ProbeLine& probe);

// Lambda-eliminated constraints (u_i w_k - u_k w_i) / (|u| |w|), i != k, for
// the restricted forms u, w. The pivot k defaults to argmax |w_k|. Throws
// DegenerateGeometry if the probe passes through e1 or a restricted form
// vanishes identically.
Eigen::VectorXd gen_kruppa_constraints(const KruppaInstance& inst,
                                       const ProbeLine& probe,
                                       std::optional<int> pivot = std::nullopt);

// The polar line of e1 (points p with p . e1 = 0), on which p -> e1 x p is
// an isometry onto the pencil of epipolar lines.
ProbeLine polar_probe(const Eigen::Vector3d& e1);

// Uses the polar probe, then up to five random probe lines drawn from
// `seed` if it is rejected.
struct ProbedConstraints {
  Eigen::VectorXd values;
  ProbeLine probe;
  int pivot = 0;
};
ProbedConstraints gen_kruppa_constraints(const KruppaInstance& inst,
                                         std::uint64_t seed);

// Smallest chordal separation between the epipolar tangent lines (complex
// ones included) through either epipole. Near zero means two tangencies
// almost coincide, a non-generic configuration.
double tangency_separation(const KruppaInstance& inst);

// Proportionality residual of [e1]x^T adj(C1) [e1]x and F^T adj(C2) F.
// Throws DegenerateGeometry for a singular conic.
double classical_kruppa_residual(const geom::EpipolarGeometry& eg,
                                 const Eigen::Matrix3d& C1,
                                 const Eigen::Matrix3d& C2);

struct TangencyData {
  std::vector<double> thetas;
  std::vector<Eigen::Vector3d> q1;
  std::vector<Eigen::Vector3d> q2;
  std::vector<Eigen::Vector4d> Q;
  geom::PluckerLine baseline;
  int expected = 0;  // class m
  // expected - number of real tangencies found (complex pairs)
  int deficit() const { return expected - static_cast<int>(thetas.size()); }
};

// Curve parameters where the epipolar plane is tangent to the curve. Throws
// DegenerateGeometry on a double root (non-generic configuration).
TangencyData tangency_points(const curves::RationalCurve3D& curve,
                             const geom::Camera& cam1,
                             const geom::Camera& cam2);

// True iff some nonzero quadric contains the baseline and every point.
bool quadric_degeneracy(const geom::PluckerLine& baseline,
                        const std::vector<Eigen::Vector4d>& points);
bool quadric_degeneracy(const TangencyData& td);

// Local chart of the 7-dimensional variety of epipolar geometries: a step
// along the tangent space of rank-2 matrices (orthogonal to F), retracted
// by dropping the smallest singular value. Epipole signs follow the
// reference.
class EpipolarChart {
 public:
  explicit EpipolarChart(const geom::EpipolarGeometry& reference);
  geom::EpipolarGeometry at(const Eigen::Matrix<double, 7, 1>& x) const;
  geom::EpipolarGeometry origin() const { return at(Eigen::Matrix<double, 7, 1>::Zero()); }

 private:
  geom::EpipolarGeometry reference_;
  Eigen::Matrix3d base_;
  Eigen::Matrix3d directions_[7];
};

// Probe lines and pivots frozen at one geometry so that the stacked
// constraints are a smooth function of the epipolar geometry.
class ConstraintSystem {
 public:
  ConstraintSystem(std::vector<KruppaInstance> instances,
                   const geom::EpipolarGeometry& reference,
                   std::uint64_t seed = 7);

  int size() const { return total_; }
  // Number of constraints contributed by each instance, in stacking order.
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  Eigen::VectorXd evaluate(const geom::EpipolarGeometry& eg) const;
  // Central differences in the chart at x.
  Eigen::MatrixXd jacobian(const EpipolarChart& chart,
                           const Eigen::Matrix<double, 7, 1>& x,
                           double step = 1e-6) const;

 private:
  std::vector<KruppaInstance> instances_;
  std::vector<ProbeLine> probes_;
  std::vector<int> pivots_;
  std::vector<int> block_sizes_;
  int total_ = 0;
};

struct DimensionEstimate {
  int dimension = 0;
  int rank = 0;
  Eigen::VectorXd singular_values;
  // smallest kept / largest dropped singular value (infinity if none dropped)
  double gap_ratio = 0.0;
  bool indeterminate = false;
  // min tangency_separation over the instances
  double separation = 1.0;
};

DimensionEstimate solution_dimension(
    const std::vector<KruppaInstance>& instances,
    const geom::EpipolarGeometry& eg_truth);

struct RefineResult {
  geom::EpipolarGeometry eg;
  double residual = 0.0;  // norm of stacked constraints
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt over the epipolar chart, re-centered every step.
RefineResult refine_epipolar(const geom::EpipolarGeometry& eg_init,
                             const std::vector<KruppaInstance>& instances,
                             int max_iterations = 100);

}  // namespace curvemvg::kruppa
