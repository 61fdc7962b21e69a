#pragma once

#include <random>
#include <utility>

#include <Eigen/Core>

namespace curvemvg::geom {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix34d = Eigen::Matrix<double, 3, 4>;
using Matrix63d = Eigen::Matrix<double, 6, 3>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Homogeneous plane coordinates in P^3 (the plane {P : coords . P = 0}).
struct Plane3 {
  Eigen::Vector4d coords;

  double operator()(const Eigen::Vector4d& point) const {
    return coords.dot(point);
  }
};

// Line of P^3 in Plucker coordinates (p01, p02, p03, p23, p31, p12), where
// p_ij = X_i Y_j - X_j Y_i for two points X, Y on the line.
//
// The incidence pairing swaps the two blocks of three:
//   <L, L'> = p01 p'23 + p02 p'31 + p03 p'12 + p23 p'01 + p31 p'02 + p12 p'03
// and vanishes exactly when the lines meet. Every line satisfies the
// Grassmann quadric <L, L> / 2 = p01 p23 + p02 p31 + p03 p12 = 0.
class PluckerLine {
 public:
  PluckerLine() : coords_(Vector6d::Zero()) {}
  explicit PluckerLine(const Vector6d& coords) : coords_(coords) {}

  // Line through two points.
  static PluckerLine join(const Eigen::Vector4d& a, const Eigen::Vector4d& b);
  // Line where two planes intersect.
  static PluckerLine meet(const Eigen::Vector4d& plane_a,
                          const Eigen::Vector4d& plane_b);

  const Vector6d& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

  // |p01 p23 + p02 p31 + p03 p12| / |L|^2
  double quadric_residual() const;

  // Skew 4x4 matrix with entries p_ij. Applied to a plane it yields the
  // point where the line crosses that plane.
  Eigen::Matrix4d point_matrix() const;
  // Skew 4x4 matrix of the dual coordinates. Applied to a point it yields
  // the plane joining point and line (zero when the point is on the line).
  Eigen::Matrix4d plane_matrix() const;

  Eigen::Vector4d intersect(const Plane3& plane) const {
    return point_matrix() * plane.coords;
  }

  // Two well separated points spanning the line.
  std::pair<Eigen::Vector4d, Eigen::Vector4d> points() const;

  // Distance-like residual of point-on-line: |plane_matrix * P| for unit L
  // and unit P.
  double point_residual(const Eigen::Vector4d& point) const;

  PluckerLine normalized() const;

 private:
  Vector6d coords_;
};

// Symmetric 6x6 matrix J of the incidence pairing: <L, L'> = L^T J L'.
const Matrix6d& pairing_matrix();

double incidence(const PluckerLine& a, const PluckerLine& b);
double incidence(const Vector6d& a, const Vector6d& b);

// <a, b> / (|a| |b|)
double normalized_incidence(const PluckerLine& a, const PluckerLine& b);

// Point common to three planes (generalized cross product in R^4).
Eigen::Vector4d meet_planes(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                            const Eigen::Vector4d& c);

// Plane through three points.
Eigen::Vector4d join_points(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                            const Eigen::Vector4d& c);

struct Intrinsics {
  double focal = 1.0;
  double aspect = 1.0;  // alpha
  double skew = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Eigen::Matrix3d matrix() const;
};

struct CameraDecomposition {
  Eigen::Matrix3d K;  // upper triangular, K(2,2) = 1
  Eigen::Matrix3d R;  // rotation
  Eigen::Vector3d t;
};

// Pinhole projection P^3 -> P^2 given by a rank-3 3x4 matrix whose rows are
// the planes Gamma, Lambda, Theta.
class Camera {
 public:
  // Throws DegenerateGeometry if the matrix is not of rank 3.
  explicit Camera(const Matrix34d& matrix);

  static Camera from_parameters(const Intrinsics& k, const Eigen::Matrix3d& R,
                                const Eigen::Vector3d& t);

  const Matrix34d& matrix() const { return matrix_; }
  Eigen::Vector4d row_plane(int i) const { return matrix_.row(i).transpose(); }

  Eigen::Vector3d project(const Eigen::Vector4d& point) const {
    return matrix_ * point;
  }

  // Unit-norm kernel of the matrix.
  Eigen::Vector4d center() const;

  // 6x3 map from image points to optical rays.
  Matrix63d ray_matrix() const;
  // 3x6 map from space lines to image lines: ray_matrix()^T J, the transpose
  // of the ray map with respect to the incidence pairing.
  Matrix36d line_matrix() const;

  // A finite-norm point of P^3 projecting to p (pseudo-inverse lift).
  Eigen::Vector4d back_project(const Eigen::Vector3d& p) const;

  // RQ split of the matrix into internal and external parameters.
  CameraDecomposition decompose() const;

 private:
  Matrix34d matrix_;
};

// Camera with Haar-random orthonormal rows.
Camera random_camera(std::mt19937_64& rng);

Eigen::Vector4d center(const Camera& cam);

PluckerLine optical_ray(const Camera& cam, const Eigen::Vector3d& p);

struct LineImage {
  Eigen::Vector3d line;
  // True when the space line passes through the camera center; `line` is
  // then (numerically) zero.
  bool degenerate = false;
};

LineImage line_image(const Camera& cam, const PluckerLine& line);

// Plane through the camera center that projects onto image line l.
Plane3 plane_of_line(const Camera& cam, const Eigen::Vector3d& l);

// Homography from image 1 to image 2 induced by plane delta. Throws
// DegenerateGeometry if delta passes through either center.
Eigen::Matrix3d homography(const Camera& cam1, const Camera& cam2,
                           const Plane3& delta);

struct EpipolarGeometry {
  Eigen::Matrix3d F;   // unit Frobenius norm, p2^T F p1 = 0
  Eigen::Vector3d e1;  // F e1 = 0
  Eigen::Vector3d e2;  // e2^T F = 0
};

// Throws DegenerateGeometry for coincident centers.
EpipolarGeometry fundamental(const Camera& cam1, const Camera& cam2);

// Epipolar geometry from F alone (epipoles from its kernels).
EpipolarGeometry epipolar_geometry_from_f(const Eigen::Matrix3d& F);

// Camera pair ([I | 0], [S | e2]) with S = [e2]x F / |e2|.
std::pair<Camera, Camera> canonical_pair(const EpipolarGeometry& eg);

// |F e1|, |e2^T F| and |sigma_3| / |sigma_1| for unit-normalized inputs.
struct EpipolarResiduals {
  double right = 0.0;
  double left = 0.0;
  double rank3 = 0.0;
};
EpipolarResiduals epipolar_residuals(const EpipolarGeometry& eg);

struct AbsoluteConicImage {
  Eigen::Matrix3d omega;          // K^-T K^-1 for M = K [R | t]
  Eigen::Matrix3d omega_adjoint;  // adjugate of omega, proportional to K K^T
};

// Throws DegenerateGeometry if the left 3x3 block is singular.
AbsoluteConicImage absolute_conic_image(const Camera& cam);

Eigen::Matrix3d adjugate(const Eigen::Matrix3d& m);

}  // namespace curvemvg::geom
