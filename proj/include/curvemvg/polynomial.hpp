#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace curvemvg::poly {

inline constexpr double kDefaultTolerance = 1e-9;

// Binomial coefficient C(n, k) as an exact integer (0 when k > n).
long long binomial(int n, int k);

// Exponent tuples of all monomials of a fixed total degree in `num_vars`
// variables, in graded lexicographic order: x0^d first, x_{n-1}^d last.
class MonomialBasis {
 public:
  MonomialBasis(int num_vars, int degree);

  int num_vars() const { return num_vars_; }
  int degree() const { return degree_; }
  std::size_t size() const { return size_; }

  std::span<const int> exponents(std::size_t index) const {
    return {exponents_.data() + index * num_vars_,
            static_cast<std::size_t>(num_vars_)};
  }

  // Position of an exponent tuple in the ordering. The tuple must sum to
  // degree().
  std::size_t index_of(std::span<const int> exponents) const;

  // Row vector of all monomials evaluated at x.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  bool operator==(const MonomialBasis& other) const {
    return num_vars_ == other.num_vars_ && degree_ == other.degree_;
  }

 private:
  int num_vars_;
  int degree_;
  std::size_t size_;
  std::vector<int> exponents_;
};

MonomialBasis enumerate_monomials(int num_vars, int degree);

// Dense homogeneous polynomial: coefficient i multiplies monomial i of the
// basis.
class HomogeneousPolynomial {
 public:
  HomogeneousPolynomial(int num_vars, int degree);
  HomogeneousPolynomial(MonomialBasis basis, Eigen::VectorXd coeffs);

  const MonomialBasis& basis() const { return basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  int num_vars() const { return basis_.num_vars(); }
  int degree() const { return basis_.degree(); }

  double coeff(std::span<const int> exponents) const {
    return coeffs_[basis_.index_of(exponents)];
  }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Partial derivative with respect to variable `var` (degree drops by one).
  HomogeneousPolynomial derivative(int var) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Scaled copy with unit coefficient norm.
  HomogeneousPolynomial normalized() const;

  static HomogeneousPolynomial linear_form(
      const Eigen::Ref<const Eigen::VectorXd>& coefficients);

 private:
  MonomialBasis basis_;
  Eigen::VectorXd coeffs_;
};

double eval(const HomogeneousPolynomial& p,
            const Eigen::Ref<const Eigen::VectorXd>& x);

HomogeneousPolynomial multiply(const HomogeneousPolynomial& a,
                               const HomogeneousPolynomial& b);

// (a . y)^power expanded with multinomial coefficients.
HomogeneousPolynomial power_of_linear_form(
    const Eigen::Ref<const Eigen::VectorXd>& a, int power);

// p o A: the polynomial y -> p(A y). A maps k variables to p.num_vars().
HomogeneousPolynomial pullback(const HomogeneousPolynomial& p,
                               const Eigen::Ref<const Eigen::MatrixXd>& A);

// Binary form q(x, y) = p(x a + y b) for a ternary form p.
HomogeneousPolynomial restrict_to_line(const HomogeneousPolynomial& p,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b);

struct Proportionality {
  bool proportional = false;
  double lambda = 0.0;
  // max |p_i q_j - p_j q_i| / (|p| |q|)
  double residual = 0.0;
};

// Tests p = lambda q coefficientwise. Throws when both vectors are zero and
// when q alone is zero.
Proportionality proportional(const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& q,
                             double tol = kDefaultTolerance);

// Smallest chordal distance between two complex roots of a binary form in
// P^1; 0 for a repeated root, 1 for a form of degree < 2.
double binary_root_separation(const HomogeneousPolynomial& form);

}  // namespace curvemvg::poly
