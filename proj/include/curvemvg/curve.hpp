#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curvemvg/camera.hpp"
#include "curvemvg/polynomial.hpp"

namespace curvemvg::curves {

using Matrix4Xd = Eigen::Matrix<double, 4, Eigen::Dynamic>;

// Rational space curve P^1 -> P^3 of degree d:
//   (t, s) -> C (t^d, t^(d-1) s, ..., s^d).
// Curve parameters throughout the library are angles theta in [0, pi) with
// (t, s) = (cos theta, sin theta), which covers the whole real P^1.
class RationalCurve3D {
 public:
  // Throws DegenerateGeometry when d >= 2 and rank(C) < 3 (a line).
  explicit RationalCurve3D(Matrix4Xd coefficients);

  int degree() const { return static_cast<int>(coefficients_.cols()) - 1; }
  int genus() const { return 0; }
  const Matrix4Xd& coefficients() const { return coefficients_; }

  Eigen::Vector4d point(double theta) const;
  // d/dtheta of point(theta).
  Eigen::Vector4d derivative(double theta) const;
  Eigen::Vector4d point(double t, double s) const;

  // Tangent line of the space curve at theta.
  geom::PluckerLine tangent_line(double theta) const;

  // Binary form of degree d: the plane `plane` restricted to the curve.
  poly::HomogeneousPolynomial plane_section(const Eigen::Vector4d& plane) const;

 private:
  Matrix4Xd coefficients_;
};

enum class Preset { kConic, kTwistedCubic, kRationalQuartic, kRationalQuintic };

// Throws ConfigError for unknown names.
Preset preset_from_name(const std::string& name);
std::string preset_name(Preset preset);
int preset_degree(Preset preset);

// Generic curve of the preset's degree with coefficients drawn from `seed`.
RationalCurve3D preset_curve(Preset preset, std::uint64_t seed);
RationalCurve3D preset_curve(const std::string& name, std::uint64_t seed);

// Class of the image of a degree-d genus-g curve: 2d + 2g - 2.
int class_of(int d, int g);

// Nodes of a generic projection: (d-1)(d-2)/2 - g. Throws for g out of
// range.
int node_count(int d, int g);

struct ImageCurve {
  poly::HomogeneousPolynomial f;  // ternary form, degree d, unit norm
  int degree = 0;
  int class_m = 0;
  int nodes = 0;
  double fit_gap = 0.0;
  // max |f(p)| over held-out unit image points
  double residual = 0.0;
};

// Fits the implicit equation of the projected curve. Throws FitError if the
// fit is not unique (gap >= 1e-3) and DegenerateGeometry if the center lies
// on the curve.
ImageCurve implicit_image_curve(const RationalCurve3D& curve,
                                const geom::Camera& cam);

// Image of curve point theta (unit norm).
Eigen::Vector3d image_point(const RationalCurve3D& curve,
                            const geom::Camera& cam, double theta);

struct ImageTangent {
  Eigen::Vector3d point;  // projected curve point (unit)
  Eigen::Vector3d line;   // tangent line (canonical unit vector)
  // The image point is a crossing of two branches; `line` is the tangent of
  // the branch through theta only.
  bool at_node = false;
};

ImageTangent image_tangent(const RationalCurve3D& curve,
                           const geom::Camera& cam, double theta);

// Tangent line only, without the node check.
Eigen::Vector3d tangent_line_2d(const RationalCurve3D& curve,
                                const geom::Camera& cam, double theta);

struct DualCurveFit {
  poly::HomogeneousPolynomial phi;  // degree m, unit norm
  double fit_gap = 0.0;
  double residual = 0.0;  // max |phi(l)| over held-out unit tangents
};

// Fits the dual image curve (degree m = class_of(d, 0)) from tangent lines.
DualCurveFit dual_image_curve(const RationalCurve3D& curve,
                              const geom::Camera& cam);

// Degree-`degree` ternary form vanishing on the given unit vectors.
struct FormFit {
  poly::HomogeneousPolynomial form;
  double gap = 0.0;
};
FormFit fit_ternary_form(const std::vector<Eigen::Vector3d>& samples,
                         int degree);

struct SingularPoint {
  Eigen::Vector3d point;
  // Two distinct real curve parameters project onto it (crunode). Isolated
  // real nodes (acnodes) come from complex-conjugate parameter pairs.
  bool crunode = false;
  double theta_a = 0.0;
  double theta_b = 0.0;
};

// Real solutions of grad f = 0 in P^2, deduplicated.
std::vector<SingularPoint> singular_points(const poly::HomogeneousPolynomial& f);
// Same, then each point is checked against curve parameters.
std::vector<SingularPoint> singular_points(const poly::HomogeneousPolynomial& f,
                                           const RationalCurve3D& curve,
                                           const geom::Camera& cam);

// Symmetric matrix of a ternary quadratic form and back.
Eigen::Matrix3d conic_matrix(const poly::HomogeneousPolynomial& q);
poly::HomogeneousPolynomial quadratic_form(const Eigen::Matrix3d& m);

}  // namespace curvemvg::curves
