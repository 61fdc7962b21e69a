#include "curvemvg/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "curvemvg/errors.hpp"
#include "curvemvg/linalg.hpp"

namespace curvemvg::recon {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTruthTolerance = 1e-6;
constexpr double kMembershipTolerance = 1e-7;

int ceil_div(long long num, long long den) {
  return static_cast<int>((num + den - 1) / den);
}

// sqrt of the multinomial coefficients d! / prod e_i!; rows scaled by these
// have unit norm at unit points.
Eigen::VectorXd bombieri_weights(const poly::MonomialBasis& basis) {
  Eigen::VectorXd w(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double value = 1.0;
    int remaining = basis.degree();
    for (int e : basis.exponents(i)) {
      value *= static_cast<double>(poly::binomial(remaining, e));
      remaining -= e;
    }
    w[i] = std::sqrt(value);
  }
  return w;
}

// Chordal distance between points of P^1 given as complex affine values.
double chordal(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) /
         std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

Eigen::Vector2d polish_root(const poly::HomogeneousPolynomial& form,
                            Eigen::Vector2d ts) {
  // Newton along the unit circle of (t, s).
  for (int it = 0; it < 3; ++it) {
    const Eigen::Vector2d tangent(-ts[1], ts[0]);
    const double value = form(ts);
    const double slope = form.gradient(ts).dot(tangent);
    if (slope == 0.0) break;
    const double step = value / slope;
    if (!std::isfinite(step) || std::abs(step) > 1e-3) break;
    ts = (ts - step * tangent).normalized();
  }
  return ts;
}

// Orthonormal pair spanning the points of image line l.
std::pair<Eigen::Vector3d, Eigen::Vector3d> line_frame(const Eigen::Vector3d& l) {
  const Eigen::Vector3d n = l.normalized();
  Eigen::Index k = 0;
  n.cwiseAbs().minCoeff(&k);
  const Eigen::Vector3d a = n.cross(Eigen::Vector3d::Unit(k)).normalized();
  return {a, n.cross(a)};
}

// Image line whose back-projected plane is `plane` (which contains the
// camera center).
Eigen::Vector3d epipolar_line(const geom::Camera& cam,
                              const Eigen::Vector4d& plane) {
  const geom::Matrix34d& m = cam.matrix();
  const Eigen::Matrix3d gram = m * m.transpose();
  return gram.ldlt().solve(m * plane).normalized();
}

struct LineRoots {
  Eigen::Vector3d line;
  std::vector<Eigen::Vector3d> points;
};

double third_view_residual(const ThirdView& view, const Eigen::Vector4d& point) {
  const Eigen::Vector3d q = view.cam->project(point).normalized();
  const double grad = view.f->f.gradient(q).norm();
  const double value = std::abs(view.f->f(q));
  return grad > 0.0 ? value / grad : value;
}

bool near_truth(const curves::RationalCurve3D& curve,
                const Eigen::Vector4d& plane, const Eigen::Vector4d& point) {
  const auto roots = real_binary_roots(curve.plane_section(plane), 1e-6, 0.0);
  if (!roots) return false;
  for (const auto& ts : *roots) {
    const Eigen::Vector4d x = curve.point(ts[0], ts[1]);
    if (linalg::projective_distance(x, point) <= kTruthTolerance) return true;
  }
  return false;
}

struct WeightedFit {
  Eigen::VectorXd coeffs;  // unit norm in the monomial basis
  double gap = 1.0;
  int rank = 0;
};

// Kernel vector of the weighted rows, mapped back to monomial coefficients.
WeightedFit weighted_fit(const Eigen::MatrixXd& rows,
                         const Eigen::VectorXd& weights) {
  const Eigen::MatrixXd normalized = linalg::normalize_rows(rows);
  const linalg::NullspaceFit fit = linalg::fit_nullspace(normalized);
  WeightedFit out;
  out.rank = linalg::rank_from_singular_values(fit.singular_values);
  out.gap = fit.gap;
  out.coeffs = linalg::canonical(fit.coeffs.cwiseProduct(weights));
  return out;
}

}  // namespace

Cone cone(const curves::ImageCurve& f, const geom::Camera& cam) {
  return Cone{poly::pullback(f.f, cam.matrix())};
}

double cone_residual(const Cone& c, const Eigen::Vector4d& point) {
  return std::abs(c.Delta.normalized()(point.normalized()));
}

std::optional<std::vector<Eigen::Vector2d>> real_binary_roots(
    const poly::HomogeneousPolynomial& form, double real_tolerance,
    double collision_tolerance) {
  if (form.num_vars() != 2) {
    throw DimensionMismatch("real_binary_roots: expected a binary form");
  }
  const int m = form.degree();
  const Eigen::VectorXd& c = form.coeffs();  // c_k multiplies t^(m-k) s^k
  if (c.norm() == 0.0) throw DegenerateGeometry("real_binary_roots: zero form");
  std::vector<Eigen::Vector2d> out;
  if (m == 0) return out;
  const bool t_chart = std::abs(c[0]) >= std::abs(c[m]);
  Eigen::VectorXd ascending(m + 1);
  for (int j = 0; j <= m; ++j) ascending[j] = t_chart ? c[m - j] : c[j];
  std::vector<std::complex<double>> roots;
  if (m == 1) {
    roots.emplace_back(-ascending[0] / ascending[1], 0.0);
  } else {
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(ascending);
    for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
      roots.push_back(solver.roots()[i]);
    }
  }
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (chordal(roots[i], roots[j]) < collision_tolerance) {
        throw DegenerateGeometry("real_binary_roots: root collision");
      }
    }
  }
  bool all_real = true;
  for (const auto& z : roots) {
    if (std::abs(z.imag()) / (1.0 + std::norm(z)) > real_tolerance) {
      all_real = false;
      break;
    }
    // z = t/s in the t chart, s/t otherwise
    const Eigen::Vector2d ts = t_chart ? Eigen::Vector2d(z.real(), 1.0)
                                       : Eigen::Vector2d(1.0, z.real());
    out.push_back(polish_root(form, ts.normalized()));
  }
  if (!all_real) return std::nullopt;
  return out;
}

ComponentSplit epipolar_sweep(const curves::ImageCurve& f1,
                              const curves::ImageCurve& f2,
                              const geom::Camera& cam1,
                              const geom::Camera& cam2,
                              const SweepOptions& options) {
  if (f1.degree != f2.degree) {
    throw DimensionMismatch("epipolar_sweep: image curves differ in degree");
  }
  if (!options.truth && !options.third_view) {
    throw Error("epipolar_sweep: needs a third view or the true curve");
  }
  if (options.n_planes < 1) {
    throw Error("epipolar_sweep: n_planes must be positive");
  }
  const Eigen::Vector4d o1 = cam1.center();
  const Eigen::Vector4d o2 = cam2.center();
  if (linalg::projective_distance(o1, o2) < 1e-12) {
    throw DegenerateGeometry("epipolar_sweep: coincident centers");
  }
  Eigen::Matrix<double, 2, 4> centers;
  centers.row(0) = o1.transpose();
  centers.row(1) = o2.transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 4>> svd(centers, Eigen::ComputeFullV);
  const Eigen::Vector4d pa = svd.matrixV().col(2);
  const Eigen::Vector4d pb = svd.matrixV().col(3);

  const int d = f1.degree;
  ComponentSplit split;
  for (int k = 0; k < options.n_planes; ++k) {
    const double angle = (k + 0.5) * kPi / options.n_planes;
    const Eigen::Vector4d plane = std::cos(angle) * pa + std::sin(angle) * pb;

    LineRoots views[2];
    const curves::ImageCurve* curves_in[2] = {&f1, &f2};
    const geom::Camera* cams[2] = {&cam1, &cam2};
    std::string reason;
    for (int v = 0; v < 2 && reason.empty(); ++v) {
      views[v].line = epipolar_line(*cams[v], plane);
      const auto [a, b] = line_frame(views[v].line);
      const poly::HomogeneousPolynomial form =
          poly::restrict_to_line(curves_in[v]->f, a, b);
      try {
        const auto roots = real_binary_roots(form, options.real_tolerance,
                                             options.tangency_tolerance);
        if (!roots) {
          reason = "complex intersections";
          break;
        }
        for (const auto& ts : *roots) {
          views[v].points.push_back((ts[0] * a + ts[1] * b).normalized());
        }
      } catch (const DegenerateGeometry&) {
        reason = "tangent plane";
      }
    }
    if (!reason.empty()) {
      split.skipped.push_back({angle, reason});
      continue;
    }

    PlaneRecord record;
    record.angle = angle;
    record.plane = plane;
    const Eigen::Vector3d& l2 = views[1].line;
    for (int i = 0; i < d; ++i) {
      const geom::PluckerLine ray1 = geom::optical_ray(cam1, views[0].points[i]);
      for (int j = 0; j < d; ++j) {
        const Eigen::Vector3d& p2 = views[1].points[j];
        // plane through ray 2 transverse to the epipolar plane
        const geom::Plane3 cut{cam2.matrix().transpose() * p2.cross(l2)};
        Candidate cand;
        cand.point = ray1.intersect(cut).normalized();
        cand.index1 = i;
        cand.index2 = j;
        if (options.truth) cand.truth = near_truth(*options.truth, plane, cand.point);
        if (options.third_view) {
          cand.third_view_residual = third_view_residual(*options.third_view, cand.point);
          cand.on_curve = *cand.third_view_residual <= options.third_view->tolerance;
        } else {
          cand.on_curve = *cand.truth;
        }
        if (cand.on_curve) {
          ++record.true_count;
          split.true_component.push_back(cand.point);
        } else {
          ++record.extraneous_count;
          split.extraneous_component.push_back(cand.point);
        }
        record.candidates.push_back(std::move(cand));
      }
    }
    split.planes.push_back(std::move(record));
  }
  return split;
}

int dual_unknowns(int m) { return static_cast<int>(poly::binomial(m + 3, 3)); }
int dual_view_cap(int m) { return static_cast<int>(poly::binomial(m + 2, 2)) - 1; }
int chow_view_cap(int d) { return d * (d + 3) / 2; }

int chow_unknowns(int d) {
  return static_cast<int>(poly::binomial(d + 5, 5) - poly::binomial(d + 3, 5));
}

int min_views_dual(int m) {
  if (m < 2) throw Error("min_views_dual: m must be at least 2");
  return ceil_div(static_cast<long long>(m) * m + 6LL * m + 11, 3LL * (m + 3));
}

int min_views_dual_linear(int m) {
  if (m < 1) throw Error("min_views_dual_linear: m must be positive");
  return m + 1;
}

int min_views_chow(int d) {
  if (d < 2) throw Error("min_views_chow: d must be at least 2");
  const long long dd = d;
  return ceil_div(dd * dd * dd + 8 * dd * dd + 23 * dd + 28, 6 * (dd + 3));
}

DualSurface dual_reconstruct(const std::vector<ViewLines>& views, int m) {
  if (m < 1) throw Error("dual_reconstruct: degree must be positive");
  const poly::MonomialBasis basis(4, m);
  const Eigen::VectorXd weights = bombieri_weights(basis);
  const int unknowns = static_cast<int>(basis.size());

  DualSurface out;
  std::vector<Eigen::VectorXd> all_rows;
  for (const ViewLines& view : views) {
    Eigen::MatrixXd rows(view.lines.size(), unknowns);
    for (std::size_t i = 0; i < view.lines.size(); ++i) {
      const Eigen::Vector4d plane =
          (view.cam.matrix().transpose() * view.lines[i]).normalized();
      rows.row(i) = basis.evaluate(plane).cwiseProduct(weights).transpose();
    }
    out.view_ranks.push_back(rows.rows() == 0 ? 0 : linalg::numerical_rank(rows));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) all_rows.push_back(rows.row(i));
  }
  Eigen::MatrixXd stacked(all_rows.size(), unknowns);
  for (std::size_t i = 0; i < all_rows.size(); ++i) stacked.row(i) = all_rows[i];

  out.total_rank = all_rows.empty() ? 0 : linalg::numerical_rank(stacked);
  const int needed = unknowns - 1;
  if (out.total_rank < needed) {
    std::ostringstream msg;
    msg << "dual_reconstruct: rank " << out.total_rank << " of " << needed
        << " needed (deficit " << needed - out.total_rank << ")";
    throw RankDeficit(msg.str(), needed - out.total_rank);
  }
  const WeightedFit fit = weighted_fit(stacked, weights);
  out.Upsilon = poly::HomogeneousPolynomial(basis, fit.coeffs);
  out.fit_gap = fit.gap;
  return out;
}

double dual_residual(const DualSurface& s, const Eigen::Vector4d& plane) {
  return std::abs(s.Upsilon.normalized()(plane.normalized()));
}

std::vector<Eigen::VectorXd> grassmann_ideal_basis(int d) {
  std::vector<Eigen::VectorXd> out;
  if (d < 2) return out;
  poly::HomogeneousPolynomial quadric(6, 2);
  const int pairs[3][2] = {{0, 3}, {1, 4}, {2, 5}};
  for (const auto& p : pairs) {
    int e[6] = {0, 0, 0, 0, 0, 0};
    e[p[0]] = 1;
    e[p[1]] = 1;
    quadric.coeffs()[quadric.basis().index_of(e)] = 1.0;
  }
  const poly::MonomialBasis lower(6, d - 2);
  for (std::size_t i = 0; i < lower.size(); ++i) {
    poly::HomogeneousPolynomial mono(6, d - 2);
    mono.coeffs()[i] = 1.0;
    out.push_back(poly::multiply(mono, quadric).coeffs().normalized());
  }
  return out;
}

namespace {

ChowForm fit_chow(const std::vector<geom::Vector6d>& lines, int d,
                  std::vector<int> view_ranks) {
  if (d < 1) throw Error("chow_reconstruct: degree must be positive");
  const poly::MonomialBasis basis(6, d);
  const Eigen::VectorXd weights = bombieri_weights(basis);
  const int columns = static_cast<int>(basis.size());
  const std::vector<Eigen::VectorXd> ideal = grassmann_ideal_basis(d);
  const int n_ideal = static_cast<int>(ideal.size());

  // <c, b> = 0 in monomial coefficients is <y, b .* w> in weighted ones;
  // the fit runs in an orthonormal basis N of the complement.
  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(columns, columns);
  if (n_ideal > 0) {
    Eigen::MatrixXd B(columns, n_ideal);
    for (int j = 0; j < n_ideal; ++j) B.col(j) = ideal[j].cwiseProduct(weights);
    const Eigen::MatrixXd Q =
        Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ();
    N = Q.rightCols(columns - n_ideal);
  }

  ChowForm out;
  out.view_ranks = std::move(view_ranks);
  Eigen::MatrixXd rows(lines.size(), columns);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rows.row(i) =
        basis.evaluate(lines[i].normalized()).cwiseProduct(weights).transpose();
  }
  const Eigen::MatrixXd reduced = rows.rows() == 0
                                      ? Eigen::MatrixXd(0, N.cols())
                                      : Eigen::MatrixXd(linalg::normalize_rows(rows) * N);

  const int reduced_rank = reduced.rows() == 0 ? 0 : linalg::numerical_rank(reduced);
  out.total_rank = reduced_rank + n_ideal;
  const int needed = columns - 1;
  if (out.total_rank < needed) {
    std::ostringstream msg;
    msg << "chow_reconstruct: rank " << out.total_rank << " of " << needed
        << " needed (deficit " << needed - out.total_rank << ")";
    if (!out.view_ranks.empty()) {
      msg << "; per-view ranks";
      for (int r : out.view_ranks) msg << ' ' << r;
    }
    throw RankDeficit(msg.str(), needed - out.total_rank);
  }
  const linalg::NullspaceFit fit = linalg::fit_nullspace(reduced);
  const Eigen::VectorXd c = linalg::canonical((N * fit.coeffs).cwiseProduct(weights));
  out.Gamma = poly::HomogeneousPolynomial(basis, c);
  out.fit_gap = fit.gap;
  for (const Eigen::VectorXd& b : ideal) {
    out.ideal_orthogonality = std::max(out.ideal_orthogonality, std::abs(b.dot(c)));
  }
  return out;
}

}  // namespace

ChowForm chow_fit_lines(const std::vector<geom::Vector6d>& lines, int d) {
  return fit_chow(lines, d, {});
}

ChowForm chow_reconstruct(const std::vector<ViewPoints>& views, int d) {
  if (d < 1) throw Error("chow_reconstruct: degree must be positive");
  const poly::MonomialBasis basis(6, d);
  const Eigen::VectorXd weights = bombieri_weights(basis);
  std::vector<geom::Vector6d> lines;
  std::vector<int> view_ranks;
  for (const ViewPoints& view : views) {
    const geom::Matrix63d ray = view.cam.ray_matrix();
    Eigen::MatrixXd rows(view.points.size(), basis.size());
    for (std::size_t i = 0; i < view.points.size(); ++i) {
      lines.push_back(ray * view.points[i]);
      rows.row(i) = basis.evaluate(lines.back().normalized())
                        .cwiseProduct(weights)
                        .transpose();
    }
    view_ranks.push_back(rows.rows() == 0 ? 0 : linalg::numerical_rank(rows));
  }
  return fit_chow(lines, d, std::move(view_ranks));
}

double chow_residual(const ChowForm& g, const geom::PluckerLine& line) {
  return std::abs(g.Gamma.normalized()(line.coords().normalized()));
}

bool chow_membership(const ChowForm& g, const Eigen::Vector4d& point,
                     int trials, std::uint64_t seed) {
  if (trials < 3) throw Error("chow_membership: at least 3 trials required");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Vector4d p = point.normalized();
  for (int t = 0; t < trials; ++t) {
    Eigen::Vector4d other;
    for (int i = 0; i < 4; ++i) other[i] = normal(rng);
    // keep the second point away from P
    other -= other.dot(p) * p;
    const geom::PluckerLine line = geom::PluckerLine::join(p, other.normalized());
    if (chow_residual(g, line) > kMembershipTolerance) return false;
  }
  return true;
}

std::vector<CountingRow> consistency_report(const std::vector<int>& ds,
                                            const std::vector<int>& ms) {
  std::vector<CountingRow> rows;
  for (int d : ds) {
    CountingRow r;
    r.kind = "chow";
    r.degree = d;
    r.unknowns = chow_unknowns(d);
    r.per_view_cap = chow_view_cap(d);
    r.ceil_bound = ceil_div(r.unknowns - 1, r.per_view_cap);
    r.formula = min_views_chow(d);
    r.consistent = r.ceil_bound == r.formula;
    rows.push_back(r);
  }
  for (int m : ms) {
    CountingRow r;
    r.kind = "dual";
    r.degree = m;
    r.unknowns = dual_unknowns(m);
    r.per_view_cap = dual_view_cap(m);
    r.ceil_bound = ceil_div(r.unknowns - 1, r.per_view_cap);
    r.formula = min_views_dual(m);
    r.consistent = r.ceil_bound == r.formula;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace curvemvg::recon
