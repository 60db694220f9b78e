#pragma once

// Weighted Dirichlet integrals
//
//     I(r, y, v) = r^{-2} * integral over B_r(y) of |grad v|^2 |x - y|^{2-n} dx,
//
// the two-phase product I(r, y, h+) * I(r, y, h-), radius sweeps with
// extrapolation to r -> 0, and the gradient magnitude defined through that
// limit: |grad u(y)|^2 = lim I(r, y, (u - u(y))^+) / c0.
//
// Discretisation. Gradients are taken on lattice edges: the derivative along
// axis k lives on the staggered cell centred between two neighbouring nodes,
// and each staggered cell is weighted with the exact-ish kernel integral over
// its intersection with the ball (see quadrature.hpp). For a positive part
// (u - level)^+ the kink is located on each edge by linear interpolation and
// the edge integral of the clipped linear interpolant is taken exactly, so a
// level set lying between nodes costs no first-order error.

#include "acflab/grid.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace acflab {

class AdmissibilityError : public std::runtime_error {
 public:
  AdmissibilityError(const std::string& what, Index worst_node, double worst_ratio)
      : std::runtime_error(what), worst_node(worst_node), worst_ratio(worst_ratio) {}
  Index worst_node;
  double worst_ratio;
};

/// c0 = 1/2 * integral over B_1 of |x|^{2-n}: pi/2 in 2D, pi in 3D.
double c0_closed_form(int n);

/// The same constant from the cell quadrature on a lattice of spacing h.
double c0_grid_quadrature(int n, double h);

/// Smallest radius the cell quadrature resolves (three cells).
inline double min_radius(const GridSpec& g) { return 3.0 * g.spacing; }

/// A non-negative ACF partner: a field taken as is, or the positive part
/// (field - level)^+ of a field.
struct Partner {
  const ScalarField* field = nullptr;
  std::optional<double> level;

  static Partner plain(const ScalarField& f) { return {&f, std::nullopt}; }
  static Partner positive_part(const ScalarField& f, double level) { return {&f, level}; }

  double node_value(Index i) const {
    const double v = (*field)[i];
    return level ? std::max(v - *level, 0.0) : v;
  }
  double value_at(const Point& p) const;

  /// I(r, center, partner).
  double energy(const Point& center, double r) const;
};

/// I(r, y, v) for a field used as is.
double weighted_dirichlet(const ScalarField& v, const BasePoint& y, double r);

/// I(r, center, (u - level)^+), with the kink resolved per edge.
double superlevel_dirichlet(const ScalarField& u, double level, const Point& center, double r);

/// I(r, y, u_y) with u_y = (u - u(y))^+.
inline double superlevel_dirichlet(const ScalarField& u, const BasePoint& y, double r) {
  return superlevel_dirichlet(u, y.level, y.y, r);
}

/// Throws AdmissibilityError unless the partners have (numerically) disjoint
/// supports inside B_r(y) and both vanish at y. Ratios are relative to the
/// partners' maxima over the ball.
void check_admissible(const Partner& hp, const Partner& hm, const BasePoint& y, double r, double tol = 1e-2);

/// I(r,y,hp) * I(r,y,hm), after the admissibility check.
double acf_product(const Partner& hp, const Partner& hm, const BasePoint& y, double r, double tol = 1e-2);
double acf_product(const ScalarField& hp, const ScalarField& hm, const BasePoint& y, double r, double tol = 1e-2);

/// Least-squares fit value(r) = L + A r^delta.
struct LimitFit {
  double limit = 0.0;      // L clamped at 0
  double raw_limit = 0.0;  // L as fitted
  double slope = 0.0;      // A
  double delta = 1.0;
  double residual = 0.0;  // RMS residual relative to the mean |value|
  bool low_confidence = false;
  bool decreasing_in_r = false;
};

inline constexpr double kLowConfidenceResidual = 0.05;

/// Requires >= 4 radii spanning a factor >= 4.
LimitFit extrapolate_limit(const std::vector<double>& radii, const std::vector<double>& values,
                           double delta = 1.0);

/// A sampled curve r -> (I, product) with the r -> 0 extrapolation of
/// whichever series the sweep was built for.
struct RadiusSweep {
  std::vector<double> radii;  // strictly decreasing
  std::vector<double> dirichlet;
  std::vector<double> product;
  LimitFit fit;
  double extrapolated_limit = 0.0;
};

/// Checks the radii are strictly decreasing, positive, resolved and keep
/// B_r(center) inside the grid.
void require_admissible_radii(const GridSpec& g, const Point& center, const std::vector<double>& radii);

struct MonotonicityResult {
  RadiusSweep sweep;
  bool pass = true;
  double worst_excess = 0.0;  // largest product(r_small) - product(r_large)*(1+tol_rel) - tol_abs
};

/// Product evaluated at every radius; passes iff it is non-decreasing in r up to tol_rel/tol_abs.
MonotonicityResult monotonicity_sweep(const Partner& hp, const Partner& hm, const BasePoint& y,
                                      const std::vector<double>& radii, double tol_rel = 1e-3,
                                      double tol_abs = 0.0);

struct AlmostMonotonicityFit {
  RadiusSweep sweep;
  double C = 0.0;
  double delta = 1.0;
  bool pass = true;
};

/// Smallest C >= 0 with product(rho) <= (1 + r) product(r) + C r^delta for
/// all sampled rho <= r.
AlmostMonotonicityFit almost_monotonicity_fit(const Partner& hp, const Partner& hm, const BasePoint& y,
                                              const std::vector<double>& radii, double delta = 1.0);

struct GradientEstimate {
  double value = 0.0;  // sqrt(max(L, 0) / c0)
  RadiusSweep sweep;
};

/// |grad u(y)| through the r -> 0 limit of I(r, y, u_y).
GradientEstimate gradient_estimate(const ScalarField& u, const BasePoint& y, const std::vector<double>& radii,
                                   double delta = 1.0);

/// |grad u(y)| through lim product(r, y, u_y, G) / lim I(r, y, G), each
/// limit extrapolated separately.
GradientEstimate gradient_via_partner(const ScalarField& u, const BasePoint& y, const ScalarField& partner,
                                      const std::vector<double>& radii, double delta = 1.0);

struct QuotientCheck {
  double quotient_a = 0.0;  // lim product / lim I(G_a)
  double quotient_b = 0.0;
  double relative_difference = 0.0;
  bool pass = true;
};

QuotientCheck quotient_identity_check(const ScalarField& u, const BasePoint& y, const ScalarField& partner_a,
                                      const ScalarField& partner_b, const std::vector<double>& radii,
                                      double rel_tol = 0.05);

/// Deterministic points in the open ball B_radius(center): 2n axis points at
/// 0.999 * radius followed by uniform random points.
std::vector<Point> ball_samples(const Point& center, double radius, int count, std::uint64_t seed);

struct StabilityResult {
  double eps = 0.0;
  double sup_deviation = 0.0;  // sup_y |I(r_eps, y, u_y) - I(r_eps, y0, u_y)|
  double fitted_C1 = 0.0;      // sup_deviation / eps
  std::vector<Point> samples;
};

/// |I(r, y, u_y) - I(r, y0, u_y)| with r = eps + |y - y0| and u_y = (u - u(y))^+.
double stability_deviation(const ScalarField& u, const BasePoint& y0, const Point& y, double eps);

/// r_eps = eps + |y - y0| for every sample y with |y - y0| < eps^2.
StabilityResult stability_check(const ScalarField& u, const BasePoint& y0, double eps, int samples,
                                std::uint64_t seed = 1);

struct StabilitySweep {
  std::vector<StabilityResult> per_eps;
  double fitted_C1 = 0.0;  // max over the schedule of deviation / eps
};

StabilitySweep stability_sweep(const ScalarField& u, const BasePoint& y0, const std::vector<double>& eps,
                               int samples, std::uint64_t seed = 1);

}  // namespace acflab
