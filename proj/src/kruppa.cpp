#include "curvemvg/kruppa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "curvemvg/errors.hpp"
#include "curvemvg/linalg.hpp"

namespace curvemvg::kruppa {

namespace {

using Vector7d = Eigen::Matrix<double, 7, 1>;

constexpr double kPi = std::numbers::pi;
constexpr int kProbeRetries = 5;

ProbeLine random_probe(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ProbeLine probe;
  for (int i = 0; i < 3; ++i) {
    probe.a[i] = n(rng);
    probe.b[i] = n(rng);
  }
  return probe;
}

int largest_entry(const Eigen::VectorXd& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  return static_cast<int>(k);
}

}  // namespace

Eigen::Matrix3d KruppaInstance::gamma() const { return linalg::skew(eg.e1); }

KruppaInstance make_instance(poly::HomogeneousPolynomial phi1,
                             poly::HomogeneousPolynomial phi2,
                             const geom::EpipolarGeometry& eg) {
  if (phi1.num_vars() != 3 || phi2.num_vars() != 3) {
    throw DimensionMismatch("make_instance: dual curves must be ternary forms");
  }
  if (phi1.degree() != phi2.degree()) {
    throw DimensionMismatch("make_instance: dual curves of degrees " +
                            std::to_string(phi1.degree()) + " and " +
                            std::to_string(phi2.degree()));
  }
  return KruppaInstance{std::move(phi1), std::move(phi2), eg};
}

KruppaInstance make_instance(const curves::RationalCurve3D& curve,
                             const geom::Camera& cam1,
                             const geom::Camera& cam2) {
  return make_instance(curves::dual_image_curve(curve, cam1).phi,
                       curves::dual_image_curve(curve, cam2).phi,
                       geom::fundamental(cam1, cam2));
}

KruppaInstance with_geometry(const KruppaInstance& inst,
                             const geom::EpipolarGeometry& eg) {
  KruppaInstance out = inst;
  out.eg = eg;
  return out;
}

std::pair<poly::HomogeneousPolynomial, poly::HomogeneousPolynomial>
restricted_forms(const KruppaInstance& inst, const ProbeLine& probe) {
  const Eigen::Vector3d e1 = inst.eg.e1.normalized();
  const Eigen::Vector3d normal = probe.a.cross(probe.b);
  if (normal.norm() <= 1e-12 * probe.a.norm() * probe.b.norm()) {
    throw DegenerateGeometry("kruppa: probe points coincide");
  }
  if (std::abs(normal.normalized().dot(e1)) <= 1e-9) {
    throw DegenerateGeometry("kruppa: probe line passes through e1");
  }
  // Orthonormal frame of the probe line so the forms do not depend on how
  // the line was specified beyond a rotation.
  Eigen::Matrix<double, 3, 2> ab;
  ab.col(0) = probe.a.normalized();
  ab.col(1) = (probe.b - ab.col(0).dot(probe.b) * ab.col(0)).normalized();
  const Eigen::Matrix<double, 3, 2> fx = inst.xi() * ab;
  const Eigen::Matrix<double, 3, 2> gx = inst.gamma() * ab;
  return {poly::pullback(inst.phi2, fx), poly::pullback(inst.phi1, gx)};
}

Eigen::VectorXd gen_kruppa_constraints(const KruppaInstance& inst,
                                       const ProbeLine& probe,
                                       std::optional<int> pivot) {
  const auto [u_form, w_form] = restricted_forms(inst, probe);
  const int m = inst.class_m();
  // Bombieri scaling makes the coefficient norm rotation invariant.
  Eigen::VectorXd scale(m + 1);
  for (int k = 0; k <= m; ++k) {
    scale[k] = 1.0 / std::sqrt(static_cast<double>(poly::binomial(m, k)));
  }
  const Eigen::VectorXd u = u_form.coeffs().cwiseProduct(scale);
  const Eigen::VectorXd w = w_form.coeffs().cwiseProduct(scale);
  const double nu = u.norm();
  const double nw = w.norm();
  // Size of each form relative to its inputs, to detect a zero form.
  const double su = inst.phi2.coeffs().norm() * std::pow(inst.eg.F.norm(), m);
  const double sw = inst.phi1.coeffs().norm() * std::pow(inst.eg.e1.norm(), m);
  if (!(nu > 1e-13 * su) || !(nw > 1e-13 * sw)) {
    throw DegenerateGeometry("kruppa: restricted form vanishes on the probe line");
  }
  const int n = m + 1;
  const int k = pivot.value_or(largest_entry(w));
  if (k < 0 || k >= n) throw DimensionMismatch("kruppa: pivot out of range");
  Eigen::VectorXd c(n - 1);
  for (int i = 0, j = 0; i < n; ++i) {
    if (i == k) continue;
    c[j++] = (u[i] * w[k] - u[k] * w[i]) / (nu * nw);
  }
  return c;
}

ProbeLine polar_probe(const Eigen::Vector3d& e1) {
  const Eigen::Vector3d n = e1.normalized();
  Eigen::Index axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  const Eigen::Vector3d a = n.cross(Eigen::Vector3d::Unit(axis)).normalized();
  return {a, n.cross(a)};
}

ProbedConstraints gen_kruppa_constraints(const KruppaInstance& inst,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt <= kProbeRetries; ++attempt) {
    const ProbeLine probe = attempt == 0 ? polar_probe(inst.eg.e1) : random_probe(rng);
    try {
      const Eigen::VectorXd w = restricted_forms(inst, probe).second.coeffs();
      Eigen::VectorXd scaled(w.size());
      for (int k = 0; k < w.size(); ++k) {
        scaled[k] = w[k] / std::sqrt(static_cast<double>(
                                poly::binomial(static_cast<int>(w.size()) - 1, k)));
      }
      const int pivot = largest_entry(scaled);
      return {gen_kruppa_constraints(inst, probe, pivot), probe, pivot};
    } catch (const DegenerateGeometry&) {
    }
  }
  throw DegenerateGeometry("kruppa: no valid probe line in " +
                           std::to_string(kProbeRetries) + " attempts");
}

double tangency_separation(const KruppaInstance& inst) {
  const auto [u, w] = restricted_forms(inst, polar_probe(inst.eg.e1));
  return std::min(poly::binary_root_separation(u), poly::binary_root_separation(w));
}

double classical_kruppa_residual(const geom::EpipolarGeometry& eg,
                                 const Eigen::Matrix3d& C1,
                                 const Eigen::Matrix3d& C2) {
  for (const Eigen::Matrix3d* c : {&C1, &C2}) {
    const double scale = c->norm();
    if (scale == 0.0 || std::abs(c->determinant()) <= 1e-12 * scale * scale * scale) {
      throw DegenerateGeometry("classical_kruppa_residual: singular conic");
    }
  }
  const Eigen::Matrix3d E = linalg::skew(eg.e1);
  const Eigen::Matrix3d lhs = E.transpose() * geom::adjugate(C1) * E;
  const Eigen::Matrix3d rhs = eg.F.transpose() * geom::adjugate(C2) * eg.F;
  return poly::proportional(lhs.reshaped(), rhs.reshaped()).residual;
}

TangencyData tangency_points(const curves::RationalCurve3D& curve,
                             const geom::Camera& cam1,
                             const geom::Camera& cam2) {
  TangencyData td;
  const Eigen::Vector4d o1 = cam1.center();
  const Eigen::Vector4d o2 = cam2.center();
  td.baseline = geom::PluckerLine::join(o1, o2).normalized();
  td.expected = curves::class_of(curve.degree(), curve.genus());

  auto g = [&](double theta) {
    Eigen::Matrix4d m;
    m << o1, o2, curve.point(theta), curve.derivative(theta);
    return m.determinant();
  };

  constexpr int kSamples = 2000;
  std::vector<double> values(kSamples + 1);
  for (int i = 0; i <= kSamples; ++i) values[i] = g(kPi * i / kSamples);
  const double scale =
      *std::max_element(values.begin(), values.end(),
                        [](double a, double b) { return std::abs(a) < std::abs(b); });
  const double tiny = 1e-10 * std::abs(scale);

  std::vector<double> roots;
  for (int i = 0; i < kSamples; ++i) {
    double lo = kPi * i / kSamples;
    double hi = kPi * (i + 1) / kSamples;
    double flo = values[i];
    const double fhi = values[i + 1];
    if (flo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if (flo * fhi > 0.0) {
      // Touching the axis without crossing: a double root.
      if (i > 0 && std::abs(flo) < tiny && std::abs(flo) <= std::abs(values[i - 1]) &&
          std::abs(flo) <= std::abs(fhi)) {
        throw DegenerateGeometry(
            "tangency_points: double tangency, configuration is not generic");
      }
      continue;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = g(mid);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  if (!roots.empty() && roots.back() >= kPi - 1e-12) {
    roots.back() -= kPi;
    std::sort(roots.begin(), roots.end());
  }
  for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
    if (roots[i + 1] - roots[i] < 1e-6) {
      throw DegenerateGeometry(
          "tangency_points: coincident tangencies, configuration is not generic");
    }
  }

  for (double theta : roots) {
    const Eigen::Vector4d X = curve.point(theta).normalized();
    td.thetas.push_back(theta);
    td.Q.push_back(X);
    td.q1.push_back(cam1.project(X).normalized());
    td.q2.push_back(cam2.project(X).normalized());
  }
  return td;
}

bool quadric_degeneracy(const geom::PluckerLine& baseline,
                        const std::vector<Eigen::Vector4d>& points) {
  const auto [a, b] = baseline.points();
  std::vector<Eigen::Vector4d> all{a.normalized(), b.normalized(),
                                   (a.normalized() + b.normalized()).normalized()};
  for (const auto& p : points) all.push_back(p.normalized());
  const poly::MonomialBasis quadrics(4, 2);
  if (all.size() < quadrics.size()) return true;
  Eigen::MatrixXd rows(all.size(), quadrics.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    rows.row(i) = quadrics.evaluate(all[i]).transpose();
  }
  return linalg::numerical_rank(rows, 1e-8) < static_cast<int>(quadrics.size());
}

bool quadric_degeneracy(const TangencyData& td) {
  return quadric_degeneracy(td.baseline, td.Q);
}

EpipolarChart::EpipolarChart(const geom::EpipolarGeometry& reference)
    : reference_(reference) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(reference.F,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  const auto& s = svd.singularValues();
  if (!(s[1] > 1e-12 * s[0])) {
    throw DegenerateGeometry("EpipolarChart: F has rank below 2");
  }
  base_ = U.leftCols<2>() * s.head<2>().asDiagonal() * V.leftCols<2>().transpose();
  base_ /= base_.norm();
  // Tangent space of rank-2 matrices at F: U A V^T with A(2,2) = 0, minus
  // the scale direction.
  const std::pair<int, int> off[] = {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}};
  int k = 0;
  for (const auto& [i, j] : off) {
    directions_[k++] = U.col(i) * V.col(j).transpose();
  }
  const double n = std::hypot(s[0], s[1]);
  directions_[k] = (s[1] / n) * U.col(0) * V.col(0).transpose() -
                   (s[0] / n) * U.col(1) * V.col(1).transpose();
}

geom::EpipolarGeometry EpipolarChart::at(const Vector7d& x) const {
  Eigen::Matrix3d F = base_;
  for (int i = 0; i < 7; ++i) F += x[i] * directions_[i];
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  geom::EpipolarGeometry eg;
  eg.F = svd.matrixU().leftCols<2>() * s.head<2>().asDiagonal() *
         svd.matrixV().leftCols<2>().transpose();
  eg.F /= eg.F.norm();
  eg.e1 = svd.matrixV().col(2);
  eg.e2 = svd.matrixU().col(2);
  if (eg.e1.dot(reference_.e1) < 0) eg.e1 = -eg.e1;
  if (eg.e2.dot(reference_.e2) < 0) eg.e2 = -eg.e2;
  return eg;
}

ConstraintSystem::ConstraintSystem(std::vector<KruppaInstance> instances,
                                   const geom::EpipolarGeometry& reference,
                                   std::uint64_t seed)
    : instances_(std::move(instances)) {
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const ProbedConstraints c =
        gen_kruppa_constraints(with_geometry(instances_[i], reference), seed + i);
    probes_.push_back(c.probe);
    pivots_.push_back(c.pivot);
    block_sizes_.push_back(static_cast<int>(c.values.size()));
    total_ += block_sizes_.back();
  }
}

Eigen::VectorXd ConstraintSystem::evaluate(const geom::EpipolarGeometry& eg) const {
  Eigen::VectorXd out(total_);
  int row = 0;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const Eigen::VectorXd c =
        gen_kruppa_constraints(with_geometry(instances_[i], eg), probes_[i], pivots_[i]);
    out.segment(row, c.size()) = c;
    row += static_cast<int>(c.size());
  }
  return out;
}

Eigen::MatrixXd ConstraintSystem::jacobian(const EpipolarChart& chart,
                                           const Vector7d& x, double step) const {
  Eigen::MatrixXd J(total_, 7);
  for (int j = 0; j < 7; ++j) {
    Vector7d plus = x;
    Vector7d minus = x;
    plus[j] += step;
    minus[j] -= step;
    J.col(j) = (evaluate(chart.at(plus)) - evaluate(chart.at(minus))) / (2.0 * step);
  }
  return J;
}

DimensionEstimate solution_dimension(const std::vector<KruppaInstance>& instances,
                                     const geom::EpipolarGeometry& eg_truth) {
  const ConstraintSystem system(instances, eg_truth);
  const EpipolarChart chart(eg_truth);
  Eigen::MatrixXd J = system.jacobian(chart, Vector7d::Zero());
  // Equilibrate instances against each other; block scaling keeps the rank.
  int row = 0;
  for (int size : system.block_sizes()) {
    const double norm = J.middleRows(row, size).norm();
    if (norm > 0.0) J.middleRows(row, size) /= norm;
    row += size;
  }

  DimensionEstimate est;
  est.singular_values = linalg::padded_singular_values(J);
  est.rank = linalg::rank_from_singular_values(est.singular_values, 1e-7);
  est.dimension = std::max(0, 7 - est.rank);
  const auto& s = est.singular_values;
  if (est.rank == 0) {
    est.gap_ratio = 0.0;
  } else if (est.rank >= s.size() || s[est.rank] == 0.0) {
    est.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    est.gap_ratio = s[est.rank - 1] / s[est.rank];
  }
  est.indeterminate = est.gap_ratio < 10.0;
  for (const auto& inst : instances) {
    est.separation = std::min(est.separation, tangency_separation(with_geometry(inst, eg_truth)));
  }
  return est;
}

RefineResult refine_epipolar(const geom::EpipolarGeometry& eg_init,
                             const std::vector<KruppaInstance>& instances,
                             int max_iterations) {
  constexpr double kStop = 1e-10;
  const ConstraintSystem system(instances, eg_init);
  RefineResult out;
  out.eg = EpipolarChart(eg_init).origin();
  Eigen::VectorXd r = system.evaluate(out.eg);
  out.residual = r.norm();
  double mu = 1e-3;

  auto try_step = [&](const EpipolarChart& chart, const Vector7d& delta) {
    const geom::EpipolarGeometry trial = chart.at(delta);
    const Eigen::VectorXd rt = system.evaluate(trial);
    if (!(rt.norm() < out.residual)) return false;
    out.eg = trial;
    r = rt;
    out.residual = rt.norm();
    return true;
  };

  while (out.residual > kStop && out.iterations < max_iterations) {
    const EpipolarChart chart(out.eg);
    const Eigen::MatrixXd J = system.jacobian(chart, Vector7d::Zero());
    ++out.iterations;

    // Minimum-norm Gauss-Newton step with backtracking.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > 1e-10 * sv[0]) inv[i] = 1.0 / sv[i];
    }
    const Vector7d gn = -svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * r;
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-3 && !improved; alpha *= 0.5) {
      improved = try_step(chart, alpha * gn);
    }

    // Damped steps when Gauss-Newton does not reduce the residual.
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += mu * (JtJ.diagonal().maxCoeff() + 1e-12);
      improved = try_step(chart, -A.ldlt().solve(g));
      mu = improved ? std::max(mu / 10.0, 1e-12) : mu * 10.0;
    }
    if (!improved) break;
  }
  out.converged = out.residual <= 1e-8;
  return out;
}

}  // namespace curvemvg::kruppa
