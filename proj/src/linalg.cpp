#include "curvemvg/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "curvemvg/errors.hpp"

namespace curvemvg::linalg {

namespace {

// Zero-pads a wide matrix to square so that the full right singular basis
// and the implicit zero singular values are available.
Eigen::MatrixXd pad_to_square(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() >= m.cols()) return m;
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(m.cols(), m.cols());
  padded.topRows(m.rows()) = m;
  return padded;
}

}  // namespace

Eigen::MatrixXd normalize_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (n == 0.0 || !std::isfinite(n)) continue;
    out.row(kept++) = rows.row(i) / n;
  }
  out.conservativeResize(kept, Eigen::NoChange);
  return out;
}

NullspaceFit fit_nullspace(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) {
    throw FitError("fit_nullspace: empty row set");
  }
  const Eigen::MatrixXd a = pad_to_square(normalize_rows(rows));
  if (a.rows() == 0) throw FitError("fit_nullspace: all rows are zero");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::Index n = rows.cols();

  NullspaceFit fit;
  fit.singular_values = s.head(n);
  fit.coeffs = canonical(svd.matrixV().col(n - 1));
  if (n == 1) {
    fit.gap = 0.0;
  } else {
    const double second = s[n - 2];
    const double floor = 1e-15 * std::max(s[0], 1e-300);
    fit.gap = second <= floor ? 1.0 : s[n - 1] / second;
  }
  return fit;
}

Eigen::VectorXd padded_singular_values(
    const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m.cols());
  if (m.rows() == 0) return s;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& values = svd.singularValues();
  s.head(values.size()) = values;
  return s;
}

int rank_from_singular_values(const Eigen::VectorXd& singular_values, double rel_tol) {
  if (singular_values.size() == 0 || singular_values[0] <= 0.0) return 0;
  const double threshold = rel_tol * singular_values[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values[i] > threshold) ++rank;
  }
  return rank;
}

int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m,
                   double rel_tol) {
  return rank_from_singular_values(padded_singular_values(m), rel_tol);
}

Eigen::MatrixXd kernel_basis(const Eigen::Ref<const Eigen::MatrixXd>& m,
                             double rel_tol) {
  const Eigen::MatrixXd a = pad_to_square(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const int rank = rank_from_singular_values(Eigen::VectorXd(svd.singularValues()),
                                  rel_tol);
  return svd.matrixV().rightCols(m.cols() - rank);
}

Eigen::VectorXd canonical(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  Eigen::VectorXd out = v / n;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out[i]) > 1e-12) {
      if (out[i] < 0.0) out = -out;
      break;
    }
  }
  return out;
}

double abs_cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, std::abs(a.dot(b)) / (na * nb));
}

double projective_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) {
  // sin of the angle between the lines spanned by a and b; accurate for
  // nearly parallel vectors, unlike 1 - cos.
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  const Eigen::VectorXd ua = a / na;
  Eigen::VectorXd ub = b / nb;
  if (ua.dot(ub) < 0.0) ub = -ub;
  const double chord = (ua - ub).norm();
  return chord * std::sqrt(std::max(0.0, 1.0 - 0.25 * chord * chord));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace curvemvg::linalg
