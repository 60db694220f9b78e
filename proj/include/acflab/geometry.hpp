#pragma once

// Dini moduli, rotated model cones {x : <x - a, e> > |x'| w(|x'|)}, level
// boundaries of grid functions, and the discrete exterior-touching test.

#include "acflab/grid.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace acflab {

/// A modulus of continuity w on [0, 1] with a certified Dini integral
/// int_0^1 w(t)/t dt.
class DiniModulus {
 public:
  enum class Family { zero, hoelder, log_squared, tabulated };

  DiniModulus() : DiniModulus(zero()) {}

  static DiniModulus zero();
  /// w(t) = coefficient * t^alpha, Dini integral coefficient/alpha.
  static DiniModulus hoelder(double alpha, double coefficient = 1.0);
  /// w(t) = 1 / log(e/t)^2, Dini integral 1. Held at w(1) = 1 beyond t = 1.
  static DiniModulus log_squared();
  /// Piecewise linear through (t_k, w_k) with t_0 = 0, w_0 = 0, constant past the last knot.
  static DiniModulus tabulated(std::vector<double> t, std::vector<double> w);

  double operator()(double t) const;

  Family family() const { return family_; }
  double alpha() const { return alpha_; }
  double coefficient() const { return coefficient_; }
  const std::vector<double>& knots() const { return t_; }
  const std::vector<double>& knot_values() const { return w_; }
  std::string name() const;

  /// Closed form where one exists, otherwise the certified quadrature value.
  double dini_integral() const { return dini_; }
  /// Adaptive quadrature of the Dini integral to absolute tolerance tol.
  double dini_quadrature(double tol = 1e-10) const;

 private:
  DiniModulus(Family f, double alpha, double coefficient, std::vector<double> t, std::vector<double> w);
  // w(e^{-s}) for s in [0, inf], with the s = inf limit handled per family.
  double of_log(double s) const;

  Family family_ = Family::zero;
  double alpha_ = 0.0;
  double coefficient_ = 0.0;
  std::vector<double> t_, w_;
  double dini_ = 0.0;
};

struct TouchingCone {
  Point apex;
  Point axis;  // unit; points into the touching set
  DiniModulus modulus;
  double reach = 1.0;

  TouchingCone() = default;
  TouchingCone(Point apex_, Point axis_, DiniModulus modulus_, double reach_);

  /// <x - apex, axis> - |x'| w(|x'|); positive strictly inside.
  double margin(const Point& x) const;
  bool contains(const Point& x) const { return margin(x) > 0.0; }
};

DomainMask cone_mask(const TouchingCone& c, const GridSpec& g);

struct LevelBoundary {
  double level = 0.0;
  int dim = 2;
  std::vector<Point> points;

  bool empty() const { return points.empty(); }
};

/// Crossings of {f = level} on lattice edges whose endpoints lie on opposite
/// sides (one value > level, the other <= level), linearly interpolated.
LevelBoundary extract_level_boundary(const ScalarField& f, double level);

/// Boundary of a mask: the midpoints of edges joining inside and outside nodes.
LevelBoundary mask_boundary(const DomainMask& m);

struct HausdorffDistance {
  double one_sided = 0.0;  // sup over a of dist(., b)
  double symmetric = 0.0;
};

HausdorffDistance hausdorff_distance(const LevelBoundary& a, const LevelBoundary& b);

/// dist(p, b); b non-empty.
double distance_to(const LevelBoundary& b, const Point& p);

void write_boundary_csv(std::ostream& os, const LevelBoundary& b);

struct TouchVerdict {
  bool pass = false;
  bool on_boundary = false;   // y within one cell diagonal of the level boundary
  Index violations = 0;       // super-level nodes strictly inside the cone (beyond the interface layer)
  Index worst_node = -1;      // deepest violating node
  double worst_margin = 0.0;  // its cone margin
};

/// Super-level set of f through y versus the cone, inside B_reach(y).
/// Violations with cone margin <= tol belong to the interface layer and are
/// ignored.
TouchVerdict verify_exterior_touch(const ScalarField& f, const BasePoint& y, const TouchingCone& c, double tol);

/// The same test for a domain given as a mask (the mask plays the super-level set).
TouchVerdict verify_exterior_touch(const DomainMask& domain, const Point& y, const TouchingCone& c, double tol);

/// Unit directions tried by the axis search: `count` equispaced angles in 2D,
/// a Fibonacci sphere of `count` points in 3D.
std::vector<Point> search_directions(int dim, int count);

struct AxisSearch {
  bool found = false;
  Point axis;
  TouchVerdict verdict;  // for `axis`: a pass if found, else the least violating direction
  int tried = 0;
};

/// First passing axis among search_directions, refined towards the middle of
/// the passing arc (2D) or cap (3D).
AxisSearch find_touching_axis(const ScalarField& f, const BasePoint& y, const DiniModulus& w, double reach,
                              double tol, int count = 72);
AxisSearch find_touching_axis(const DomainMask& domain, const Point& y, const DiniModulus& w, double reach,
                              double tol, int count = 72);

}  // namespace acflab
