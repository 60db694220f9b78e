#include "acflab/functionals.hpp"

#include "acflab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace acflab {

namespace {

template <typename EdgeTerm>
double staggered_energy(const GridSpec& g, const Point& center, double r, EdgeTerm term) {
  require(center.size() == g.dim, "weighted Dirichlet integral: center has wrong dimension");
  require(r >= min_radius(g) * (1.0 - 1e-12),
          "weighted Dirichlet integral: radius below three cells (" + std::to_string(min_radius(g)) + ")");
  require(g.contains_ball(center, r), "weighted Dirichlet integral: ball exits the grid");
  const double inv_h2 = 1.0 / (g.spacing * g.spacing);
  double sum = 0.0;
  for (int k = 0; k < g.dim; ++k) {
    const GridSpec lattice = g.staggered(k);
    const Index step = g.stride(k);
    for_each_ball_cell(lattice, center, r, [&](Index cell, double w) {
      const MultiIndex m = lattice.multi(cell);
      sum += w * term(g.linear(m), step, m[k], g.shape[k]);
    });
  }
  return sum * inv_h2 / (r * r);
}

// h times the edge integral of |d/dx (u - level)^+|^2, in units of squared
// node differences. `pos` is the axis position of node lo (of n).
//
// On an edge cut by the level set the crossing is located from the positive
// side: the slope is taken from the next edge beyond the positive node and
// extrapolated to the level. Sampled fields are often clipped at the level
// (free boundaries), and interpolating across the clipped node would flatten
// the slope on exactly the edges the limit r -> 0 depends on. When the outer
// edge is missing or flatter than the cut edge, the linear interpolant is used.
double clipped_edge_term(const ScalarField& u, double level, Index lo, Index step, Index pos, Index n) {
  const Index hi = lo + step;
  const double a = u[lo] - level, b = u[hi] - level;
  if (a <= 0.0 && b <= 0.0) return 0.0;
  const double d = b - a;
  if (a > 0.0 && b > 0.0) return d * d;
  const bool up = b > 0.0;
  const double inside = up ? b : a;
  const double cut = std::abs(d);
  const bool has_outer = up ? pos + 2 < n : pos > 0;
  if (has_outer) {
    const double outer = (up ? u[hi + step] : u[lo - step]) - level - inside;
    if (outer > cut) return outer * inside;
  }
  return cut * inside;
}

template <typename Visit>
void for_each_node_near(const GridSpec& g, const Point& center, double radius, Visit&& visit) {
  MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < g.dim; ++k) {
    lo[k] = std::max<Index>(0, static_cast<Index>(std::ceil((center[k] - radius - g.origin[k]) / g.spacing)));
    hi[k] = std::min<Index>(g.shape[k] - 1,
                            static_cast<Index>(std::floor((center[k] + radius - g.origin[k]) / g.spacing)));
    if (lo[k] > hi[k]) return;
  }
  MultiIndex m{0, 0, 0};
  for (m[0] = lo[0]; m[0] <= hi[0]; ++m[0])
    for (m[1] = lo[1]; m[1] <= hi[1]; ++m[1])
      for (m[2] = lo[2]; m[2] <= hi[2]; ++m[2]) {
        const Index i = g.linear(m);
        if ((g.node(m) - center).norm() <= radius) visit(i);
      }
}

std::vector<double> energies(const Partner& p, const Point& center, const std::vector<double>& radii) {
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) out.push_back(p.energy(center, r));
  return out;
}

bool can_extrapolate(const std::vector<double>& radii) {
  if (radii.size() < 4) return false;
  const auto [mn, mx] = std::minmax_element(radii.begin(), radii.end());
  return *mx >= 4.0 * *mn * (1.0 - 1e-12);
}

}  // namespace

double c0_closed_form(int n) {
  require(n == 2 || n == 3, "c0: dimension must be 2 or 3");
  // 1/2 * |S^{n-1}| * integral_0^1 t dt
  const double sphere = n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  return 0.5 * sphere * 0.5;
}

double c0_grid_quadrature(int n, double h) {
  require(n == 2 || n == 3, "c0: dimension must be 2 or 3");
  require(h > 0.0 && h < 0.5, "c0: spacing must be in (0, 1/2)");
  const double half = std::ceil(1.0 / h + 1.0) * h;
  const GridSpec lattice = GridSpec::cube(n, -half, half, h);
  return 0.5 * ball_kernel_quadrature(lattice, Point::Zero(n), 1.0);
}

double Partner::value_at(const Point& p) const {
  const double v = interpolate(*field, p);
  return level ? std::max(v - *level, 0.0) : v;
}

double Partner::energy(const Point& center, double r) const {
  const ScalarField& f = *field;
  if (!level) {
    return staggered_energy(f.grid(), center, r, [&](Index lo, Index step, Index, Index) {
      const double d = f[lo + step] - f[lo];
      return d * d;
    });
  }
  const double l = *level;
  return staggered_energy(f.grid(), center, r, [&](Index lo, Index step, Index pos, Index n) {
    return clipped_edge_term(f, l, lo, step, pos, n);
  });
}

double weighted_dirichlet(const ScalarField& v, const BasePoint& y, double r) {
  return Partner::plain(v).energy(y.y, r);
}

double superlevel_dirichlet(const ScalarField& u, double level, const Point& center, double r) {
  return Partner::positive_part(u, level).energy(center, r);
}

void check_admissible(const Partner& hp, const Partner& hm, const BasePoint& y, double r, double tol) {
  require(hp.field && hm.field, "acf pair: missing field");
  const GridSpec& g = hp.field->grid();
  require(hm.field->grid() == g, "acf pair: partners live on different grids");
  double max_p = 0.0, max_m = 0.0;
  for_each_node_near(g, y.y, r + g.spacing, [&](Index i) {
    const double a = hp.node_value(i), b = hm.node_value(i);
    if (a < -tol * std::abs(a) - 1e-12 || b < -tol * std::abs(b) - 1e-12)
      throw AdmissibilityError("acf pair: partners must be non-negative", i, 0.0);
    max_p = std::max(max_p, a);
    max_m = std::max(max_m, b);
  });
  if (max_p == 0.0 || max_m == 0.0) return;
  Index worst = -1;
  double worst_ratio = 0.0;
  for_each_node_near(g, y.y, r + g.spacing, [&](Index i) {
    const double ratio = hp.node_value(i) * hm.node_value(i) / (max_p * max_m);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = i;
    }
  });
  if (worst_ratio > tol)
    throw AdmissibilityError("acf pair: supports overlap beyond the interface layer", worst, worst_ratio);
  const double at_p = std::max(hp.value_at(y.y), 0.0) / max_p;
  const double at_m = std::max(hm.value_at(y.y), 0.0) / max_m;
  if (at_p > tol || at_m > tol)
    throw AdmissibilityError("acf pair: partners must vanish at the base point", y.nearest, std::max(at_p, at_m));
}

double acf_product(const Partner& hp, const Partner& hm, const BasePoint& y, double r, double tol) {
  check_admissible(hp, hm, y, r, tol);
  return hp.energy(y.y, r) * hm.energy(y.y, r);
}

double acf_product(const ScalarField& hp, const ScalarField& hm, const BasePoint& y, double r, double tol) {
  return acf_product(Partner::plain(hp), Partner::plain(hm), y, r, tol);
}

LimitFit extrapolate_limit(const std::vector<double>& radii, const std::vector<double>& values, double delta) {
  require(radii.size() == values.size(), "extrapolate_limit: radii and values differ in length");
  require(can_extrapolate(radii), "extrapolate_limit: need >= 4 radii spanning a factor >= 4");
  require(delta > 0.0, "extrapolate_limit: delta must be positive");
  const auto m = static_cast<Index>(radii.size());
  // Fit the offsets from the first value so that constant data is reproduced exactly.
  const double base = values.front();
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs(m);
  for (Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::pow(radii[static_cast<std::size_t>(i)], delta);
    rhs[i] = values[static_cast<std::size_t>(i)] - base;
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  LimitFit fit;
  fit.delta = delta;
  fit.raw_limit = base + coef[0];
  fit.slope = coef[1];
  fit.limit = std::max(fit.raw_limit, 0.0);
  const double rms = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(m));
  const double scale = Eigen::Map<const Eigen::VectorXd>(values.data(), m).cwiseAbs().mean();
  fit.residual = scale > 0.0 ? rms / scale : 0.0;
  fit.low_confidence = fit.residual > kLowConfidenceResidual;
  fit.decreasing_in_r = fit.slope < 0.0;
  return fit;
}

void require_admissible_radii(const GridSpec& g, const Point& center, const std::vector<double>& radii) {
  require(!radii.empty(), "radius sweep: no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] > 0.0, "radius sweep: radii must be positive");
    if (i > 0) require(radii[i] < radii[i - 1], "radius sweep: radii must be strictly decreasing");
  }
  require(radii.back() >= min_radius(g) * (1.0 - 1e-12), "radius sweep: smallest radius is below three cells");
  require(g.contains_ball(center, radii.front()), "radius sweep: largest ball exits the grid");
}

MonotonicityResult monotonicity_sweep(const Partner& hp, const Partner& hm, const BasePoint& y,
                                      const std::vector<double>& radii, double tol_rel, double tol_abs) {
  require_admissible_radii(hp.field->grid(), y.y, radii);
  check_admissible(hp, hm, y, radii.front());
  MonotonicityResult out;
  out.sweep.radii = radii;
  for (double r : radii) out.sweep.product.push_back(hp.energy(y.y, r) * hm.energy(y.y, r));
  const auto& p = out.sweep.product;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double excess = p[k + 1] - p[k] * (1.0 + tol_rel) - tol_abs;
    out.worst_excess = k == 0 ? excess : std::max(out.worst_excess, excess);
    if (excess > 0.0) out.pass = false;
  }
  if (can_extrapolate(radii)) {
    out.sweep.fit = extrapolate_limit(radii, p);
    out.sweep.extrapolated_limit = out.sweep.fit.limit;
  }
  return out;
}

AlmostMonotonicityFit almost_monotonicity_fit(const Partner& hp, const Partner& hm, const BasePoint& y,
                                              const std::vector<double>& radii, double delta) {
  require(delta > 0.0 && delta <= 1.0, "almost_monotonicity_fit: delta must lie in (0, 1]");
  require_admissible_radii(hp.field->grid(), y.y, radii);
  check_admissible(hp, hm, y, radii.front());
  AlmostMonotonicityFit out;
  out.delta = delta;
  out.sweep.radii = radii;
  for (double r : radii) out.sweep.product.push_back(hp.energy(y.y, r) * hm.energy(y.y, r));
  const auto& p = out.sweep.product;
  for (std::size_t i = 0; i < radii.size(); ++i)
    for (std::size_t j = i; j < radii.size(); ++j) {
      const double r = radii[i];  // radii[j] <= r
      out.C = std::max(out.C, (p[j] - (1.0 + r) * p[i]) / std::pow(r, delta));
    }
  out.pass = std::isfinite(out.C);
  if (can_extrapolate(radii)) {
    out.sweep.fit = extrapolate_limit(radii, p);
    out.sweep.extrapolated_limit = out.sweep.fit.limit;
  }
  return out;
}

GradientEstimate gradient_estimate(const ScalarField& u, const BasePoint& y, const std::vector<double>& radii,
                                   double delta) {
  require_admissible_radii(u.grid(), y.y, radii);
  GradientEstimate out;
  out.sweep.radii = radii;
  out.sweep.dirichlet = energies(Partner::positive_part(u, y.level), y.y, radii);
  out.sweep.fit = extrapolate_limit(radii, out.sweep.dirichlet, delta);
  out.sweep.extrapolated_limit = out.sweep.fit.limit;
  out.value = std::sqrt(out.sweep.fit.limit / c0_closed_form(u.grid().dim));
  return out;
}

namespace {

struct PartnerQuotient {
  RadiusSweep sweep;
  LimitFit partner_fit;
  double quotient = 0.0;
};

PartnerQuotient partner_quotient(const ScalarField& u, const BasePoint& y, const ScalarField& partner,
                                 const std::vector<double>& radii, double delta) {
  require(partner.grid() == u.grid(), "partner quotient: partner lives on a different grid");
  require_admissible_radii(u.grid(), y.y, radii);
  const Partner uy = Partner::positive_part(u, y.level);
  const Partner g = Partner::plain(partner);
  check_admissible(uy, g, y, radii.front());
  PartnerQuotient out;
  out.sweep.radii = radii;
  out.sweep.dirichlet = energies(g, y.y, radii);
  const auto iu = energies(uy, y.y, radii);
  for (std::size_t k = 0; k < radii.size(); ++k) out.sweep.product.push_back(iu[k] * out.sweep.dirichlet[k]);
  out.sweep.fit = extrapolate_limit(radii, out.sweep.product, delta);
  out.partner_fit = extrapolate_limit(radii, out.sweep.dirichlet, delta);
  require(out.partner_fit.raw_limit > 0.0, "partner quotient: partner energy vanishes in the limit");
  out.quotient = out.sweep.fit.limit / out.partner_fit.raw_limit;
  out.sweep.extrapolated_limit = out.quotient;
  return out;
}

}  // namespace

GradientEstimate gradient_via_partner(const ScalarField& u, const BasePoint& y, const ScalarField& partner,
                                      const std::vector<double>& radii, double delta) {
  auto q = partner_quotient(u, y, partner, radii, delta);
  GradientEstimate out;
  out.value = std::sqrt(q.quotient / c0_closed_form(u.grid().dim));
  out.sweep = std::move(q.sweep);
  return out;
}

QuotientCheck quotient_identity_check(const ScalarField& u, const BasePoint& y, const ScalarField& partner_a,
                                      const ScalarField& partner_b, const std::vector<double>& radii,
                                      double rel_tol) {
  QuotientCheck out;
  out.quotient_a = partner_quotient(u, y, partner_a, radii, 1.0).quotient;
  out.quotient_b = partner_quotient(u, y, partner_b, radii, 1.0).quotient;
  const double scale = std::max(std::abs(out.quotient_a), std::abs(out.quotient_b));
  out.relative_difference = scale > 0.0 ? std::abs(out.quotient_a - out.quotient_b) / scale : 0.0;
  out.pass = out.relative_difference <= rel_tol;
  return out;
}

std::vector<Point> ball_samples(const Point& center, double radius, int count, std::uint64_t seed) {
  require(radius > 0.0 && count >= 0, "ball_samples: need a positive radius");
  const auto n = static_cast<int>(center.size());
  std::vector<Point> out;
  for (int k = 0; k < n && static_cast<int>(out.size()) < count; ++k)
    for (double s : {1.0, -1.0}) {
      if (static_cast<int>(out.size()) >= count) break;
      Point p = center;
      p[k] += s * 0.999 * radius;
      out.push_back(p);
    }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  while (static_cast<int>(out.size()) < count) {
    Point offset(n);
    for (int k = 0; k < n; ++k) offset[k] = unit(rng);
    if (offset.norm() >= 1.0) continue;
    out.push_back(center + radius * offset);
  }
  return out;
}

double stability_deviation(const ScalarField& u, const BasePoint& y0, const Point& y, double eps) {
  const double level = interpolate(u, y);
  const double r = eps + (y - y0.y).norm();
  return std::abs(superlevel_dirichlet(u, level, y, r) - superlevel_dirichlet(u, level, y0.y, r));
}

StabilityResult stability_check(const ScalarField& u, const BasePoint& y0, double eps, int samples,
                                std::uint64_t seed) {
  require(eps > 0.0 && eps < 1.0, "stability_check: eps must lie in (0, 1)");
  require(samples >= 8, "stability_check: need at least 8 samples");
  require(u.grid().contains_ball(y0.y, eps + 2.0 * eps * eps), "stability_check: r_eps ball exits the grid");
  StabilityResult out;
  out.eps = eps;
  out.samples = ball_samples(y0.y, eps * eps, samples, seed);
  for (const Point& y : out.samples)
    out.sup_deviation = std::max(out.sup_deviation, stability_deviation(u, y0, y, eps));
  out.fitted_C1 = out.sup_deviation / eps;
  return out;
}

StabilitySweep stability_sweep(const ScalarField& u, const BasePoint& y0, const std::vector<double>& eps,
                               int samples, std::uint64_t seed) {
  StabilitySweep out;
  for (double e : eps) {
    out.per_eps.push_back(stability_check(u, y0, e, samples, seed));
    out.fitted_C1 = std::max(out.fitted_C1, out.per_eps.back().fitted_C1);
  }
  return out;
}

}  // namespace acflab
