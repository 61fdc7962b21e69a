#include "curvemvg/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Geometry>
#include <unsupported/Eigen/Polynomials>

#include "curvemvg/errors.hpp"

namespace curvemvg::poly {

long long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return result;
}

namespace {

// Number of monomials of degree `degree` in `vars` variables.
long long count_monomials(int vars, int degree) {
  if (vars == 0) return degree == 0 ? 1 : 0;
  return binomial(vars + degree - 1, degree);
}

void enumerate_into(int vars_left, int degree_left, std::vector<int>& prefix,
                    std::vector<int>& out) {
  if (vars_left == 1) {
    prefix.push_back(degree_left);
    out.insert(out.end(), prefix.begin(), prefix.end());
    prefix.pop_back();
    return;
  }
  for (int e = degree_left; e >= 0; --e) {
    prefix.push_back(e);
    enumerate_into(vars_left - 1, degree_left - e, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int num_vars, int degree)
    : num_vars_(num_vars), degree_(degree) {
  if (num_vars < 1 || degree < 0) {
    throw DimensionMismatch("MonomialBasis: need num_vars >= 1, degree >= 0");
  }
  size_ = static_cast<std::size_t>(count_monomials(num_vars, degree));
  exponents_.reserve(size_ * num_vars);
  std::vector<int> prefix;
  prefix.reserve(num_vars);
  enumerate_into(num_vars, degree, prefix, exponents_);
}

std::size_t MonomialBasis::index_of(std::span<const int> exponents) const {
  if (exponents.size() != static_cast<std::size_t>(num_vars_)) {
    throw DimensionMismatch("MonomialBasis::index_of: wrong tuple length");
  }
  // Count the tuples that precede `exponents` in descending lex order.
  long long index = 0;
  int remaining = degree_;
  for (int i = 0; i + 1 < num_vars_; ++i) {
    const int e = exponents[i];
    for (int larger = e + 1; larger <= remaining; ++larger) {
      index += count_monomials(num_vars_ - i - 1, remaining - larger);
    }
    remaining -= e;
  }
  if (remaining != exponents[num_vars_ - 1]) {
    throw DimensionMismatch("MonomialBasis::index_of: wrong total degree");
  }
  return static_cast<std::size_t>(index);
}

Eigen::VectorXd MonomialBasis::evaluate(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != num_vars_) {
    throw DimensionMismatch("MonomialBasis::evaluate: expected " +
                            std::to_string(num_vars_) + " coordinates, got " +
                            std::to_string(x.size()));
  }
  // powers(j, e) = x_j^e
  Eigen::MatrixXd powers(num_vars_, degree_ + 1);
  for (int j = 0; j < num_vars_; ++j) {
    powers(j, 0) = 1.0;
    for (int e = 1; e <= degree_; ++e) powers(j, e) = powers(j, e - 1) * x[j];
  }
  Eigen::VectorXd values(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const int* e = exponents_.data() + i * num_vars_;
    double v = 1.0;
    for (int j = 0; j < num_vars_; ++j) v *= powers(j, e[j]);
    values[i] = v;
  }
  return values;
}

MonomialBasis enumerate_monomials(int num_vars, int degree) {
  return MonomialBasis(num_vars, degree);
}

HomogeneousPolynomial::HomogeneousPolynomial(int num_vars, int degree)
    : basis_(num_vars, degree),
      coeffs_(Eigen::VectorXd::Zero(basis_.size())) {}

HomogeneousPolynomial::HomogeneousPolynomial(MonomialBasis basis,
                                             Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.size()) != basis_.size()) {
    throw DimensionMismatch("HomogeneousPolynomial: " +
                            std::to_string(coeffs_.size()) +
                            " coefficients for a basis of size " +
                            std::to_string(basis_.size()));
  }
}

double HomogeneousPolynomial::operator()(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coeffs_.dot(basis_.evaluate(x));
}

double eval(const HomogeneousPolynomial& p,
            const Eigen::Ref<const Eigen::VectorXd>& x) {
  return p(x);
}

HomogeneousPolynomial HomogeneousPolynomial::derivative(int var) const {
  if (var < 0 || var >= num_vars()) {
    throw DimensionMismatch("derivative: variable index out of range");
  }
  if (degree() == 0) return HomogeneousPolynomial(num_vars(), 0);
  HomogeneousPolynomial out(num_vars(), degree() - 1);
  std::vector<int> e(num_vars());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const auto src = basis_.exponents(i);
    if (src[var] == 0 || coeffs_[i] == 0.0) continue;
    std::copy(src.begin(), src.end(), e.begin());
    e[var] -= 1;
    out.coeffs_[out.basis_.index_of(e)] += coeffs_[i] * src[var];
  }
  return out;
}

Eigen::VectorXd HomogeneousPolynomial::gradient(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(num_vars());
  for (int j = 0; j < num_vars(); ++j) g[j] = derivative(j)(x);
  return g;
}

HomogeneousPolynomial HomogeneousPolynomial::normalized() const {
  const double n = coeffs_.norm();
  if (n == 0.0) return *this;
  return HomogeneousPolynomial(basis_, coeffs_ / n);
}

HomogeneousPolynomial HomogeneousPolynomial::linear_form(
    const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
  // Degree-1 basis order is x0, x1, ..., so coefficients map directly.
  return HomogeneousPolynomial(
      MonomialBasis(static_cast<int>(coefficients.size()), 1), coefficients);
}

HomogeneousPolynomial multiply(const HomogeneousPolynomial& a,
                               const HomogeneousPolynomial& b) {
  if (a.num_vars() != b.num_vars()) {
    throw DimensionMismatch("multiply: variable counts differ");
  }
  const int n = a.num_vars();
  HomogeneousPolynomial out(n, a.degree() + b.degree());
  std::vector<int> e(n);
  for (std::size_t i = 0; i < a.basis().size(); ++i) {
    const double ca = a.coeffs()[i];
    if (ca == 0.0) continue;
    const auto ea = a.basis().exponents(i);
    for (std::size_t j = 0; j < b.basis().size(); ++j) {
      const double cb = b.coeffs()[j];
      if (cb == 0.0) continue;
      const auto eb = b.basis().exponents(j);
      for (int v = 0; v < n; ++v) e[v] = ea[v] + eb[v];
      out.coeffs()[out.basis().index_of(e)] += ca * cb;
    }
  }
  return out;
}

HomogeneousPolynomial power_of_linear_form(
    const Eigen::Ref<const Eigen::VectorXd>& a, int power) {
  const int k = static_cast<int>(a.size());
  HomogeneousPolynomial out(k, power);
  for (std::size_t i = 0; i < out.basis().size(); ++i) {
    const auto e = out.basis().exponents(i);
    // multinomial(power; e) = prod_j C(e_0 + ... + e_j, e_j)
    double multinomial = 1.0;
    int partial = 0;
    double monomial = 1.0;
    for (int j = 0; j < k; ++j) {
      partial += e[j];
      multinomial *= static_cast<double>(binomial(partial, e[j]));
      monomial *= std::pow(a[j], e[j]);
    }
    out.coeffs()[i] = multinomial * monomial;
  }
  return out;
}

HomogeneousPolynomial pullback(const HomogeneousPolynomial& p,
                               const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != p.num_vars()) {
    throw DimensionMismatch("pullback: map has " + std::to_string(A.rows()) +
                            " rows, polynomial has " +
                            std::to_string(p.num_vars()) + " variables");
  }
  const int n = p.num_vars();
  const int k = static_cast<int>(A.cols());
  const int d = p.degree();

  // powers[i][e] = (row_i(A) . y)^e
  std::vector<std::vector<HomogeneousPolynomial>> powers(n);
  for (int i = 0; i < n; ++i) {
    powers[i].reserve(d + 1);
    for (int e = 0; e <= d; ++e) {
      powers[i].push_back(power_of_linear_form(A.row(i).transpose(), e));
    }
  }

  HomogeneousPolynomial out(k, d);
  for (std::size_t m = 0; m < p.basis().size(); ++m) {
    const double c = p.coeffs()[m];
    if (c == 0.0) continue;
    const auto e = p.basis().exponents(m);
    HomogeneousPolynomial term = powers[0][e[0]];
    for (int i = 1; i < n; ++i) term = multiply(term, powers[i][e[i]]);
    out.coeffs() += c * term.coeffs();
  }
  return out;
}

HomogeneousPolynomial restrict_to_line(const HomogeneousPolynomial& p,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b) {
  if (p.num_vars() != 3) {
    throw DimensionMismatch("restrict_to_line: expected a ternary form");
  }
  if (a.cross(b).norm() <= 1e-12 * a.norm() * b.norm()) {
    throw DegenerateGeometry("restrict_to_line: points are proportional");
  }
  Eigen::Matrix<double, 3, 2> ab;
  ab << a, b;
  return pullback(p, ab);
}

Proportionality proportional(const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& q,
                             double tol) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("proportional: lengths differ");
  }
  const double np = p.norm();
  const double nq = q.norm();
  if (np == 0.0 && nq == 0.0) {
    throw Error("proportional: both vectors are zero, scale is indeterminate");
  }
  if (nq == 0.0) throw Error("proportional: reference vector is zero");

  Proportionality r;
  r.lambda = p.dot(q) / (nq * nq);
  if (np == 0.0) {
    r.proportional = true;
    return r;
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    for (Eigen::Index j = i + 1; j < p.size(); ++j) {
      worst = std::max(worst, std::abs(p[i] * q[j] - p[j] * q[i]));
    }
  }
  r.residual = worst / (np * nq);
  r.proportional = r.residual <= tol;
  return r;
}

double binary_root_separation(const HomogeneousPolynomial& form) {
  if (form.num_vars() != 2) {
    throw DimensionMismatch("binary_root_separation: expected a binary form");
  }
  const int m = form.degree();
  if (m < 2) return 1.0;
  const Eigen::VectorXd& c = form.coeffs();  // c_k multiplies t^(m-k) s^k
  if (c.norm() == 0.0) throw Error("binary_root_separation: zero form");
  // Affine chart with the larger end coefficient leading; the chordal
  // metric is invariant under z -> 1/z.
  Eigen::VectorXd ascending(m + 1);
  const bool t_chart = std::abs(c[0]) >= std::abs(c[m]);
  for (int j = 0; j <= m; ++j) ascending[j] = t_chart ? c[m - j] : c[j];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(ascending);
  const auto& roots = solver.roots();
  double best = 1.0;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    for (Eigen::Index j = i + 1; j < roots.size(); ++j) {
      const std::complex<double> a = roots[i], b = roots[j];
      const double d = std::abs(a - b) /
                       std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
      best = std::min(best, d);
    }
  }
  return best;
}

}  // namespace curvemvg::poly
