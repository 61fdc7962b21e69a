#include "curvemvg/camera.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "curvemvg/errors.hpp"
#include "curvemvg/linalg.hpp"

namespace curvemvg::geom {

namespace {

// Plucker-style 2x2 minors of two 4-vectors in block order
// (01, 02, 03, 23, 31, 12).
Vector6d wedge(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  Vector6d w;
  w << a[0] * b[1] - a[1] * b[0],
       a[0] * b[2] - a[2] * b[0],
       a[0] * b[3] - a[3] * b[0],
       a[2] * b[3] - a[3] * b[2],
       a[3] * b[1] - a[1] * b[3],
       a[1] * b[2] - a[2] * b[1];
  return w;
}

Vector6d swap_blocks(const Vector6d& v) {
  Vector6d s;
  s << v.tail<3>(), v.head<3>();
  return s;
}

// Skew matrix with (0,1)=v0 (0,2)=v1 (0,3)=v2 (2,3)=v3 (3,1)=v4 (1,2)=v5.
Eigen::Matrix4d skew_from_block_order(const Vector6d& v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = v[0];
  m(0, 2) = v[1];
  m(0, 3) = v[2];
  m(2, 3) = v[3];
  m(3, 1) = v[4];
  m(1, 2) = v[5];
  return m - m.transpose();
}

}  // namespace

PluckerLine PluckerLine::join(const Eigen::Vector4d& a,
                              const Eigen::Vector4d& b) {
  return PluckerLine(wedge(a, b));
}

PluckerLine PluckerLine::meet(const Eigen::Vector4d& plane_a,
                              const Eigen::Vector4d& plane_b) {
  // The dual coordinates of the intersection line are the minors of the two
  // planes; primal coordinates follow by swapping blocks.
  return PluckerLine(swap_blocks(wedge(plane_a, plane_b)));
}

double PluckerLine::quadric_residual() const {
  const double n2 = coords_.squaredNorm();
  if (n2 == 0.0) return 0.0;
  return std::abs(0.5 * incidence(coords_, coords_)) / n2;
}

Eigen::Matrix4d PluckerLine::point_matrix() const {
  return skew_from_block_order(coords_);
}

Eigen::Matrix4d PluckerLine::plane_matrix() const {
  return skew_from_block_order(swap_blocks(coords_));
}

std::pair<Eigen::Vector4d, Eigen::Vector4d> PluckerLine::points() const {
  // Columns of the point matrix are the crossings with the coordinate
  // planes; the two largest are independent.
  const Eigen::Matrix4d pm = point_matrix();
  int best = 0;
  for (int j = 1; j < 4; ++j) {
    if (pm.col(j).norm() > pm.col(best).norm()) best = j;
  }
  const Eigen::Vector4d a = pm.col(best).normalized();
  int second = -1;
  double second_score = -1.0;
  for (int j = 0; j < 4; ++j) {
    if (j == best) continue;
    // component of col j orthogonal to a
    const Eigen::Vector4d c = pm.col(j) - a.dot(pm.col(j)) * a;
    if (c.norm() > second_score) {
      second_score = c.norm();
      second = j;
    }
  }
  Eigen::Vector4d b = pm.col(second) - a.dot(pm.col(second)) * a;
  return {a, b.normalized()};
}

double PluckerLine::point_residual(const Eigen::Vector4d& point) const {
  const double nl = coords_.norm();
  const double np = point.norm();
  if (nl == 0.0 || np == 0.0) return 0.0;
  return (plane_matrix() * point).norm() / (nl * np);
}

PluckerLine PluckerLine::normalized() const {
  return PluckerLine(Vector6d(linalg::canonical(coords_)));
}

const Matrix6d& pairing_matrix() {
  static const Matrix6d J = [] {
    Matrix6d j = Matrix6d::Zero();
    j.topRightCorner<3, 3>().setIdentity();
    j.bottomLeftCorner<3, 3>().setIdentity();
    return j;
  }();
  return J;
}

double incidence(const Vector6d& a, const Vector6d& b) {
  return a.head<3>().dot(b.tail<3>()) + a.tail<3>().dot(b.head<3>());
}

double incidence(const PluckerLine& a, const PluckerLine& b) {
  return incidence(a.coords(), b.coords());
}

double normalized_incidence(const PluckerLine& a, const PluckerLine& b) {
  const double n = a.coords().norm() * b.coords().norm();
  return n == 0.0 ? 0.0 : incidence(a, b) / n;
}

Eigen::Vector4d meet_planes(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                            const Eigen::Vector4d& c) {
  Eigen::Matrix<double, 3, 4> m;
  m << a.transpose(), b.transpose(), c.transpose();
  Eigen::Vector4d x;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix3d minor;
    int col = 0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      minor.col(col++) = m.col(j);
    }
    x[i] = ((i % 2 == 0) ? 1.0 : -1.0) * minor.determinant();
  }
  return x;
}

Eigen::Vector4d join_points(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                            const Eigen::Vector4d& c) {
  // Same cofactor expansion: the result is orthogonal to all three inputs.
  return meet_planes(a, b, c);
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << focal, skew, u0,
       0.0, aspect * focal, v0,
       0.0, 0.0, 1.0;
  return k;
}

Camera::Camera(const Matrix34d& matrix) : matrix_(matrix) {
  const Eigen::Vector4d s = linalg::padded_singular_values(matrix_).head<4>();
  if (!(s[0] > 0.0) || s[2] <= 1e-12 * s[0]) {
    throw DegenerateGeometry("Camera: projection matrix must have rank 3");
  }
}

Camera Camera::from_parameters(const Intrinsics& k, const Eigen::Matrix3d& R,
                               const Eigen::Vector3d& t) {
  Matrix34d rt;
  rt << R, t;
  return Camera(k.matrix() * rt);
}

Eigen::Vector4d Camera::center() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::Matrix4d(
      (Eigen::Matrix4d() << matrix_, Eigen::RowVector4d::Zero()).finished()),
      Eigen::ComputeFullV);
  return linalg::canonical(svd.matrixV().col(3));
}

Camera random_camera(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix4d g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = normal(rng);
  const Eigen::Matrix4d q = Eigen::HouseholderQR<Eigen::Matrix4d>(g).householderQ();
  return Camera(Matrix34d(q.topRows<3>()));
}

Eigen::Vector4d center(const Camera& cam) { return cam.center(); }

Matrix63d Camera::ray_matrix() const {
  const Eigen::Vector4d gamma = row_plane(0);
  const Eigen::Vector4d lambda = row_plane(1);
  const Eigen::Vector4d theta = row_plane(2);
  Matrix63d m;
  m.col(0) = PluckerLine::meet(lambda, theta).coords();
  m.col(1) = PluckerLine::meet(theta, gamma).coords();
  m.col(2) = PluckerLine::meet(gamma, lambda).coords();
  return m;
}

Matrix36d Camera::line_matrix() const {
  return ray_matrix().transpose() * pairing_matrix();
}

Eigen::Vector4d Camera::back_project(const Eigen::Vector3d& p) const {
  const Eigen::Matrix3d mmt = matrix_ * matrix_.transpose();
  return matrix_.transpose() * mmt.ldlt().solve(p);
}

CameraDecomposition Camera::decompose() const {
  // RQ via QR of the row-reversed transpose.
  Eigen::Matrix3d A = matrix_.leftCols<3>();
  if (A.determinant() < 0.0) A = -A;
  const double sign = (matrix_.leftCols<3>().determinant() < 0.0) ? -1.0 : 1.0;
  Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
  P(0, 2) = P(1, 1) = P(2, 0) = 1.0;
  Eigen::HouseholderQR<Eigen::Matrix3d> qr((P * A).transpose());
  const Eigen::Matrix3d Q = qr.householderQ();
  const Eigen::Matrix3d Rt = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::Matrix3d K = P * Rt.transpose() * P;
  Eigen::Matrix3d R = P * Q.transpose();
  const Eigen::Vector3d d = K.diagonal().array().sign();
  K = K * d.asDiagonal();
  R = d.asDiagonal() * R;
  CameraDecomposition out;
  const double scale = K(2, 2);
  out.K = K / scale;
  out.R = R;
  out.t = K.inverse() * (sign * matrix_.col(3));
  return out;
}

PluckerLine optical_ray(const Camera& cam, const Eigen::Vector3d& p) {
  if (p.norm() == 0.0) {
    throw DegenerateGeometry("optical_ray: image point is zero");
  }
  return PluckerLine(cam.ray_matrix() * p);
}

LineImage line_image(const Camera& cam, const PluckerLine& line) {
  const Matrix36d m = cam.line_matrix();
  LineImage out;
  out.line = m * line.coords();
  const double scale = m.norm() * line.coords().norm();
  out.degenerate = out.line.norm() <= 1e-12 * scale;
  if (out.degenerate) out.line.setZero();
  return out;
}

Plane3 plane_of_line(const Camera& cam, const Eigen::Vector3d& l) {
  if (l.norm() == 0.0) throw DegenerateGeometry("plane_of_line: zero line");
  return Plane3{cam.matrix().transpose() * l};
}

Eigen::Matrix3d homography(const Camera& cam1, const Camera& cam2,
                           const Plane3& delta) {
  const Eigen::Vector4d& d = delta.coords;
  for (const Camera* cam : {&cam1, &cam2}) {
    const Eigen::Vector4d o = cam->center();
    if (std::abs(d.dot(o)) <= 1e-9 * d.norm() * o.norm()) {
      throw DegenerateGeometry("homography: plane passes through a camera center");
    }
  }
  const Eigen::Vector4d gamma = cam1.row_plane(0);
  const Eigen::Vector4d lambda = cam1.row_plane(1);
  const Eigen::Vector4d theta = cam1.row_plane(2);
  Eigen::Matrix<double, 4, 3> points;
  points.col(0) = meet_planes(lambda, theta, d);
  points.col(1) = meet_planes(theta, gamma, d);
  points.col(2) = meet_planes(gamma, lambda, d);
  return cam2.matrix() * points;
}

EpipolarGeometry fundamental(const Camera& cam1, const Camera& cam2) {
  const Eigen::Vector4d o1 = cam1.center();
  const Eigen::Vector4d o2 = cam2.center();
  if (linalg::projective_distance(o1, o2) <= 1e-12) {
    throw DegenerateGeometry("fundamental: camera centers coincide");
  }
  const Eigen::Matrix3d F = cam2.line_matrix() * cam1.ray_matrix();
  EpipolarGeometry eg;
  const Eigen::VectorXd f = linalg::canonical(
      Eigen::Map<const Eigen::VectorXd>(F.data(), 9));
  eg.F = Eigen::Map<const Eigen::Matrix3d>(f.data());
  eg.e1 = linalg::canonical(cam1.project(o2));
  eg.e2 = linalg::canonical(cam2.project(o1));
  return eg;
}

EpipolarGeometry epipolar_geometry_from_f(const Eigen::Matrix3d& F) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(F, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  EpipolarGeometry eg;
  eg.F = F / F.norm();
  eg.e1 = linalg::canonical(svd.matrixV().col(2));
  eg.e2 = linalg::canonical(svd.matrixU().col(2));
  return eg;
}

std::pair<Camera, Camera> canonical_pair(const EpipolarGeometry& eg) {
  Matrix34d first = Matrix34d::Zero();
  first.leftCols<3>().setIdentity();
  const Eigen::Matrix3d S = linalg::skew(eg.e2) * eg.F / eg.e2.norm();
  Matrix34d second;
  second << S, eg.e2;
  return {Camera(first), Camera(second)};
}

EpipolarResiduals epipolar_residuals(const EpipolarGeometry& eg) {
  const Eigen::Matrix3d F = eg.F / eg.F.norm();
  EpipolarResiduals r;
  r.right = (F * eg.e1.normalized()).norm();
  r.left = (eg.e2.normalized().transpose() * F).norm();
  const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(F).singularValues();
  r.rank3 = s[2] / s[0];
  return r;
}

Eigen::Matrix3d adjugate(const Eigen::Matrix3d& m) {
  Eigen::Matrix3d adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  }
  return adj;
}

AbsoluteConicImage absolute_conic_image(const Camera& cam) {
  const Eigen::Matrix3d A = cam.matrix().leftCols<3>();
  const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(A).singularValues();
  if (s[2] <= 1e-12 * s[0]) {
    throw DegenerateGeometry(
        "absolute_conic_image: internal parameter matrix is not invertible");
  }
  // A = K R, so A A^T = K K^T and its inverse is K^-T K^-1.
  const Eigen::Matrix3d dual = A * A.transpose();
  AbsoluteConicImage out;
  out.omega = dual.inverse();
  out.omega_adjoint = adjugate(out.omega);
  return out;
}

}  // namespace curvemvg::geom
