#include "curvemvg/curve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "curvemvg/errors.hpp"
#include "curvemvg/linalg.hpp"

namespace curvemvg::curves {

namespace {

constexpr double kPi = std::numbers::pi;

// Circular distance between two parameters on [0, pi).
double parameter_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

// Monomial vector (t^d, t^(d-1) s, ..., s^d).
Eigen::VectorXd binary_monomials(int d, double t, double s) {
  Eigen::VectorXd v(d + 1);
  for (int k = 0; k <= d; ++k) {
    v[k] = std::pow(t, d - k) * std::pow(s, k);
  }
  return v;
}

// d/dtheta of binary_monomials(d, cos theta, sin theta).
Eigen::VectorXd binary_monomials_derivative(int d, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::VectorXd v(d + 1);
  for (int k = 0; k <= d; ++k) {
    double term = 0.0;
    if (d - k > 0) term -= (d - k) * std::pow(c, d - k - 1) * std::pow(s, k + 1);
    if (k > 0) term += k * std::pow(c, d - k + 1) * std::pow(s, k - 1);
    v[k] = term;
  }
  return v;
}

// Minimizes a V- or U-shaped function on [lo, hi] by golden sections.
template <typename Fn>
double golden_minimize(Fn&& fn, double lo, double hi, int iterations = 80) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

// All parameters (deduplicated) whose image is projectively equal to q,
// up to `tol` in projective distance.
std::vector<double> parameters_projecting_to(const RationalCurve3D& curve,
                                             const geom::Camera& cam,
                                             const Eigen::Vector3d& q,
                                             double tol) {
  constexpr int kScan = 2000;
  const double step = kPi / kScan;
  auto distance = [&](double theta) {
    return linalg::projective_distance(image_point(curve, cam, theta), q);
  };
  std::vector<double> values(kScan);
  for (int i = 0; i < kScan; ++i) values[i] = distance(i * step);

  std::vector<double> found;
  for (int i = 0; i < kScan; ++i) {
    const double prev = values[(i + kScan - 1) % kScan];
    const double next = values[(i + 1) % kScan];
    if (values[i] > prev || values[i] > next || values[i] > 0.1) continue;
    const double theta = golden_minimize(distance, (i - 1) * step, (i + 1) * step);
    if (distance(theta) > tol) continue;
    const double wrapped = std::fmod(theta + kPi, kPi);
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](double t) {
      return parameter_gap(t, wrapped) < 1e-6;
    });
    if (!duplicate) found.push_back(wrapped);
  }
  return found;
}

// Unit points spread over the upper hemisphere (Fibonacci lattice).
std::vector<Eigen::Vector3d> hemisphere_points(int n) {
  std::vector<Eigen::Vector3d> points;
  points.reserve(n);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * i;
    points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return points;
}

// Fits run in extended precision: degree-8 dual curves leave the kernel
// vector determined only to ~1e-8 in double.
using Real = long double;
using Vector3r = Eigen::Matrix<Real, 3, 1>;
using Matrix3r = Eigen::Matrix<Real, 3, 3>;
using VectorXr = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

VectorXr evaluate_monomials(const poly::MonomialBasis& basis, const Vector3r& x) {
  VectorXr v(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto e = basis.exponents(i);
    Real m = 1;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < e[j]; ++k) m *= x[j];
    v[i] = m;
  }
  return v;
}

// Coefficients of a(x) * (l . x), where a has degree `basis.degree()`.
VectorXr times_linear(const poly::MonomialBasis& basis, const VectorXr& a,
                      const poly::MonomialBasis& next, const Vector3r& l) {
  VectorXr out = VectorXr::Zero(next.size());
  int e[3];
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto src = basis.exponents(i);
    for (int v = 0; v < 3; ++v) {
      e[0] = src[0];
      e[1] = src[1];
      e[2] = src[2];
      ++e[v];
      out[next.index_of(e)] += a[i] * l[v];
    }
  }
  return out;
}

// Coefficients of g(A x) for a ternary form g.
VectorXr compose_linear(const poly::MonomialBasis& basis, const VectorXr& g,
                        const Matrix3r& A) {
  const int d = basis.degree();
  std::vector<poly::MonomialBasis> bases;
  for (int k = 0; k <= d; ++k) bases.emplace_back(3, k);
  // powers[k] = (row_0(A) . x)^k
  std::vector<VectorXr> powers{VectorXr::Ones(1)};
  for (int k = 1; k <= d; ++k) {
    powers.push_back(
        times_linear(bases[k - 1], powers[k - 1], bases[k], A.row(0).transpose()));
  }
  VectorXr out = VectorXr::Zero(basis.size());
  for (std::size_t m = 0; m < basis.size(); ++m) {
    if (g[m] == 0) continue;
    const auto e = basis.exponents(m);
    VectorXr term = powers[e[0]];
    int deg = e[0];
    for (int i = 1; i < 3; ++i) {
      for (int k = 0; k < e[i]; ++k) {
        term = times_linear(bases[deg], term, bases[deg + 1], A.row(i).transpose());
        ++deg;
      }
    }
    out += g[m] * term;
  }
  return out;
}

FormFit fit_form_extended(const std::vector<Vector3r>& samples, int degree) {
  if (samples.empty()) throw FitError("fit_ternary_form: no samples");
  // Whiten the samples, then fit in a Bombieri-scaled monomial basis.
  Matrix3r moment = Matrix3r::Zero();
  for (const auto& x : samples) {
    const Vector3r u = x.normalized();
    moment += u * u.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3r> eig(moment / Real(samples.size()));
  Matrix3r T = Matrix3r::Identity();
  if (eig.eigenvalues().minCoeff() > 1e-12L * eig.eigenvalues().maxCoeff()) {
    T = eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        eig.eigenvectors().transpose();
  }

  const poly::MonomialBasis basis(3, degree);
  VectorXr weight(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const auto e = basis.exponents(j);
    weight[j] = std::sqrt(static_cast<Real>(poly::binomial(degree, e[0])) *
                          static_cast<Real>(poly::binomial(e[1] + e[2], e[1])));
  }
  const auto rows_count = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(basis.size());
  MatrixXr rows = MatrixXr::Zero(std::max(rows_count, cols), cols);
  for (Eigen::Index i = 0; i < rows_count; ++i) {
    const Vector3r y = (T * samples[i]).normalized();
    rows.row(i) = evaluate_monomials(basis, y).cwiseProduct(weight).transpose();
    rows.row(i).normalize();
  }
  const Eigen::JacobiSVD<MatrixXr> svd(rows, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Real second = cols >= 2 ? sv[cols - 2] : Real(0);
  const double gap = second > 0 ? static_cast<double>(sv[cols - 1] / second) : 1.0;
  const VectorXr g = svd.matrixV().col(cols - 1).cwiseProduct(weight);
  const VectorXr f = compose_linear(basis, g, T);
  const Eigen::VectorXd coeffs = f.cast<double>();
  return {poly::HomogeneousPolynomial(basis, linalg::canonical(coeffs)), gap};
}

// Projected curve point and its theta-derivative.
std::pair<Vector3r, Vector3r> projected_jet(const RationalCurve3D& curve,
                                            const geom::Camera& cam, Real theta) {
  const int d = curve.degree();
  const Real c = std::cos(theta);
  const Real s = std::sin(theta);
  VectorXr mono(d + 1), dmono(d + 1);
  for (int k = 0; k <= d; ++k) {
    mono[k] = std::pow(c, d - k) * std::pow(s, k);
    Real term = 0;
    if (d - k > 0) term -= (d - k) * std::pow(c, d - k - 1) * std::pow(s, k + 1);
    if (k > 0) term += k * std::pow(c, d - k + 1) * std::pow(s, k - 1);
    dmono[k] = term;
  }
  const Eigen::Matrix<Real, 3, Eigen::Dynamic> PC =
      cam.matrix().cast<Real>() * curve.coefficients().cast<Real>();
  return {PC * mono, PC * dmono};
}

}  // namespace

RationalCurve3D::RationalCurve3D(Matrix4Xd coefficients)
    : coefficients_(std::move(coefficients)) {
  if (coefficients_.cols() < 2) {
    throw DegenerateGeometry("RationalCurve3D: degree must be at least 1");
  }
  if (degree() >= 2 && linalg::numerical_rank(coefficients_, 1e-10) < 3) {
    throw DegenerateGeometry(
        "RationalCurve3D: coefficient matrix of rank < 3 describes a line");
  }
}

Eigen::Vector4d RationalCurve3D::point(double t, double s) const {
  return coefficients_ * binary_monomials(degree(), t, s);
}

Eigen::Vector4d RationalCurve3D::point(double theta) const {
  return point(std::cos(theta), std::sin(theta));
}

Eigen::Vector4d RationalCurve3D::derivative(double theta) const {
  return coefficients_ * binary_monomials_derivative(degree(), theta);
}

geom::PluckerLine RationalCurve3D::tangent_line(double theta) const {
  return geom::PluckerLine::join(point(theta), derivative(theta));
}

poly::HomogeneousPolynomial RationalCurve3D::plane_section(
    const Eigen::Vector4d& plane) const {
  // Binary basis order (d,0), (d-1,1), ... matches the columns of C.
  return poly::HomogeneousPolynomial(poly::MonomialBasis(2, degree()),
                                     coefficients_.transpose() * plane);
}

Preset preset_from_name(const std::string& name) {
  if (name == "conic") return Preset::kConic;
  if (name == "twisted_cubic") return Preset::kTwistedCubic;
  if (name == "rational_quartic") return Preset::kRationalQuartic;
  if (name == "rational_quintic") return Preset::kRationalQuintic;
  throw ConfigError("unknown curve preset '" + name + "'");
}

std::string preset_name(Preset preset) {
  switch (preset) {
    case Preset::kConic: return "conic";
    case Preset::kTwistedCubic: return "twisted_cubic";
    case Preset::kRationalQuartic: return "rational_quartic";
    case Preset::kRationalQuintic: return "rational_quintic";
  }
  return "";
}

int preset_degree(Preset preset) {
  switch (preset) {
    case Preset::kConic: return 2;
    case Preset::kTwistedCubic: return 3;
    case Preset::kRationalQuartic: return 4;
    case Preset::kRationalQuintic: return 5;
  }
  return 0;
}

RationalCurve3D preset_curve(Preset preset, std::uint64_t seed) {
  const int d = preset_degree(preset);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Haar-random orthogonal projection of the rational normal curve, whose
  // Bombieri-weighted form lies on the unit sphere. A conic uses a random
  // 3-dimensional subspace, so it spans a plane of P^3.
  const int n = std::max(d + 1, 4);
  Eigen::MatrixXd gaussian(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gaussian(i, j) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ();
  Matrix4Xd c = q.topLeftCorner(4, d + 1);
  for (int k = 0; k <= d; ++k) {
    c.col(k) *= std::sqrt(static_cast<double>(poly::binomial(d, k)));
  }
  return RationalCurve3D(c);
}

RationalCurve3D preset_curve(const std::string& name, std::uint64_t seed) {
  return preset_curve(preset_from_name(name), seed);
}

int class_of(int d, int g) { return 2 * d + 2 * g - 2; }

int node_count(int d, int g) {
  const int arithmetic_genus = (d - 1) * (d - 2) / 2;
  if (d < 2 || g < 0 || g > arithmetic_genus) {
    throw Error("node_count: genus out of range for degree " +
                std::to_string(d));
  }
  return arithmetic_genus - g;
}

Eigen::Vector3d image_point(const RationalCurve3D& curve,
                            const geom::Camera& cam, double theta) {
  return cam.project(curve.point(theta)).normalized();
}

FormFit fit_ternary_form(const std::vector<Eigen::Vector3d>& samples,
                         int degree) {
  std::vector<Vector3r> wide;
  wide.reserve(samples.size());
  for (const auto& x : samples) wide.push_back(x.cast<Real>());
  return fit_form_extended(wide, degree);
}

ImageCurve implicit_image_curve(const RationalCurve3D& curve,
                                const geom::Camera& cam) {
  const int d = curve.degree();
  const int n = 2 * static_cast<int>(poly::binomial(d + 2, 2));
  std::vector<Vector3r> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double theta = kPi * (i + 0.5) / n;
    const Eigen::Vector4d X = curve.point(theta);
    if (cam.project(X).norm() <= 1e-12 * X.norm() * cam.matrix().norm()) {
      throw DegenerateGeometry(
          "implicit_image_curve: camera center lies on the curve");
    }
    samples.push_back(projected_jet(curve, cam, theta).first.normalized());
  }
  const FormFit fit = fit_form_extended(samples, d);
  if (!(fit.gap < 1e-3)) {
    throw FitError("implicit_image_curve: fit is not unique (gap " +
                   std::to_string(fit.gap) + ")");
  }
  ImageCurve out{fit.form, d, class_of(d, curve.genus()),
                 node_count(d, curve.genus()), fit.gap, 0.0};
  for (int i = 0; i < 50; ++i) {
    const double theta = kPi * (i + 0.25) / 50.0;
    out.residual = std::max(out.residual,
                            std::abs(out.f(image_point(curve, cam, theta))));
  }
  return out;
}

Eigen::Vector3d tangent_line_2d(const RationalCurve3D& curve,
                                const geom::Camera& cam, double theta) {
  const Eigen::Vector3d p = cam.project(curve.point(theta));
  const Eigen::Vector3d dp = cam.project(curve.derivative(theta));
  return linalg::canonical(p.cross(dp));
}

ImageTangent image_tangent(const RationalCurve3D& curve,
                           const geom::Camera& cam, double theta) {
  ImageTangent out;
  out.point = image_point(curve, cam, theta);
  const Eigen::Vector3d dp = cam.project(curve.derivative(theta));
  const Eigen::Vector3d raw = out.point.cross(dp);
  if (raw.norm() <= 1e-12 * dp.norm()) {
    throw DegenerateGeometry("image_tangent: image curve is singular (cusp) at theta");
  }
  out.line = linalg::canonical(raw);
  for (double other : parameters_projecting_to(curve, cam, out.point, 1e-8)) {
    if (parameter_gap(other, theta) > 1e-5) out.at_node = true;
  }
  return out;
}

DualCurveFit dual_image_curve(const RationalCurve3D& curve,
                              const geom::Camera& cam) {
  const int m = class_of(curve.degree(), curve.genus());
  const int n = 2 * static_cast<int>(poly::binomial(m + 2, 2));
  std::vector<Vector3r> tangents;
  tangents.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto [p, dp] = projected_jet(curve, cam, kPi * (i + 0.5) / n);
    tangents.push_back(p.cross(dp).normalized());
  }
  const FormFit fit = fit_form_extended(tangents, m);
  if (!(fit.gap < 1e-3)) {
    throw FitError("dual_image_curve: fit is not unique (gap " +
                   std::to_string(fit.gap) + ")");
  }
  DualCurveFit out{fit.form, fit.gap, 0.0};
  for (int i = 0; i < 50; ++i) {
    const double theta = kPi * (i + 0.25) / 50.0;
    out.residual = std::max(
        out.residual, std::abs(out.phi(tangent_line_2d(curve, cam, theta))));
  }
  return out;
}

std::vector<SingularPoint> singular_points(
    const poly::HomogeneousPolynomial& f_in) {
  const poly::HomogeneousPolynomial f = f_in.normalized();
  if (f.num_vars() != 3) {
    throw DimensionMismatch("singular_points: expected a ternary form");
  }
  if (f.degree() < 2) return {};
  std::vector<poly::HomogeneousPolynomial> grad;
  std::vector<std::vector<poly::HomogeneousPolynomial>> hess(3);
  for (int j = 0; j < 3; ++j) {
    grad.push_back(f.derivative(j));
    for (int k = 0; k < 3; ++k) hess[j].push_back(grad[j].derivative(k));
  }
  auto gradient = [&](const Eigen::Vector3d& p) {
    return Eigen::Vector3d(grad[0](p), grad[1](p), grad[2](p));
  };

  std::vector<SingularPoint> found;
  for (const Eigen::Vector3d& start : hemisphere_points(600)) {
    Eigen::Vector3d p = start;
    Eigen::Vector3d r = gradient(p);
    for (int iter = 0; iter < 50 && r.norm() > 1e-15; ++iter) {
      Eigen::Matrix3d H;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) H(j, k) = hess[j][k](p);
      // Newton step restricted to the tangent plane of the unit sphere.
      Eigen::Matrix<double, 3, 2> B;
      const Eigen::Vector3d u = p.unitOrthogonal();
      B << u, p.cross(u);
      const Eigen::Vector2d alpha =
          (H * B).colPivHouseholderQr().solve(-r);
      Eigen::Vector3d delta = B * alpha;
      if (delta.norm() > 0.3) delta *= 0.3 / delta.norm();
      p = (p + delta).normalized();
      r = gradient(p);
      if (delta.norm() < 1e-16) break;
    }
    if (r.norm() > 1e-9) continue;
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const SingularPoint& s) {
      return linalg::projective_distance(s.point, p) < 1e-6;
    });
    if (!duplicate) found.push_back({Eigen::Vector3d(linalg::canonical(p)), false, 0.0, 0.0});
  }
  return found;
}

std::vector<SingularPoint> singular_points(const poly::HomogeneousPolynomial& f,
                                           const RationalCurve3D& curve,
                                           const geom::Camera& cam) {
  std::vector<SingularPoint> points = singular_points(f);
  for (SingularPoint& s : points) {
    const std::vector<double> params =
        parameters_projecting_to(curve, cam, s.point, 1e-7);
    if (params.size() >= 2) {
      s.crunode = true;
      s.theta_a = params[0];
      s.theta_b = params[1];
    }
  }
  return points;
}

Eigen::Matrix3d conic_matrix(const poly::HomogeneousPolynomial& q) {
  if (q.num_vars() != 3 || q.degree() != 2) {
    throw DimensionMismatch("conic_matrix: expected a ternary quadratic form");
  }
  // basis order: xx, xy, xz, yy, yz, zz
  const Eigen::VectorXd& c = q.coeffs();
  Eigen::Matrix3d m;
  m << c[0], 0.5 * c[1], 0.5 * c[2],
       0.5 * c[1], c[3], 0.5 * c[4],
       0.5 * c[2], 0.5 * c[4], c[5];
  return m;
}

poly::HomogeneousPolynomial quadratic_form(const Eigen::Matrix3d& m) {
  Eigen::VectorXd c(6);
  c << m(0, 0), m(0, 1) + m(1, 0), m(0, 2) + m(2, 0), m(1, 1),
      m(1, 2) + m(2, 1), m(2, 2);
  return poly::HomogeneousPolynomial(poly::MonomialBasis(3, 2), c);
}

}  // namespace curvemvg::curves
