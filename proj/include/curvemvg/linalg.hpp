#pragma once

#include <Eigen/Core>

namespace curvemvg::linalg {

struct NullspaceFit {
  // Unit right singular vector of the least singular value.
  Eigen::VectorXd coeffs;
  // sigma_min / sigma_second_min. Small means a unique solution; close to 1
  // means the kernel is at least two dimensional.
  double gap = 1.0;
  // Singular values, descending, padded with zeros to the column count.
  Eigen::VectorXd singular_values;
};

// Least-squares kernel vector of a stack of homogeneous linear equations.
// Each row is scaled to unit norm first; zero rows are dropped.
NullspaceFit fit_nullspace(const Eigen::Ref<const Eigen::MatrixXd>& rows);

// Singular values of `m` (descending) padded with zeros to cols(m).
Eigen::VectorXd padded_singular_values(
    const Eigen::Ref<const Eigen::MatrixXd>& m);

// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m,
                   double rel_tol = 1e-7);
int rank_from_singular_values(const Eigen::VectorXd& singular_values,
                              double rel_tol = 1e-7);

// Orthonormal basis (columns) of the right kernel of `m`, using the same
// threshold as numerical_rank.
Eigen::MatrixXd kernel_basis(const Eigen::Ref<const Eigen::MatrixXd>& m,
                             double rel_tol = 1e-7);

// Scale each row to unit Euclidean norm; zero rows are removed.
Eigen::MatrixXd normalize_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows);

// Unit-norm copy with the first clearly nonzero coordinate positive.
Eigen::VectorXd canonical(const Eigen::Ref<const Eigen::VectorXd>& v);

// Sine of the angle between two vectors viewed as projective points.
double projective_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b);

// |<a, b>| / (|a| |b|)
double abs_cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace curvemvg::linalg
