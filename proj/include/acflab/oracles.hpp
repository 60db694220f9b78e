#pragma once

// Closed-form reference fields.
//
// Alt–Caffarelli cone. With f(t) = 2 + cos t log((1 - cos t)/(1 + cos t)),
// differentiating by hand,
//
//     f'(t) = -sin t log((1 - cos t)/(1 + cos t)) + 2 cos t / sin t,
//
// so f'(pi/2) = 0 (log 1 = 0, cos(pi/2) = 0). The field in R^3 is
// u = r max(f(t)/f'(t0), 0) with t the polar angle from the x3 axis and t0
// the zero of f in (0, pi/2). Writing g = f/f'(t0), |grad u|^2 = g^2 + g'^2.

#include "acflab/grid.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace acflab {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AltCaffarelliProfile {
  double theta0 = 0.0;        // radians
  double fprime_theta0 = 0.0;  // normalisation f'(theta0)

  static double f(double theta);
  static double fprime(double theta);

  /// g = f / f'(theta0) and its derivative.
  double g(double theta) const { return f(theta) / fprime_theta0; }
  double gprime(double theta) const { return fprime(theta) / fprime_theta0; }
};

/// Root of f by bisection on [lo, hi]; throws OracleError without a sign change.
AltCaffarelliProfile ac_profile_build(double root_tol = 1e-13, double lo = 0.01,
                                      double hi = 1.5707963267948966 - 0.01);

struct OdeResidual {
  double max_residual = 0.0;
  bool empty = false;  // no samples: residual 0 by convention
};

/// max |(sin t f')' + 2 sin t f| with the outer derivative by a central
/// difference of step 1e-4.
OdeResidual ac_ode_residual(const AltCaffarelliProfile& p, const std::vector<double>& theta_samples);

class OracleField {
 public:
  enum class Tag { linear, half_plane_linear, alt_caffarelli, annulus_capacitor, homogeneous_cone_2d };

  /// <a, x> + c.
  static OracleField linear(Point a, double c = 0.0);
  /// a * max(<x, axis> - offset, 0).
  static OracleField half_plane_linear(double a, Point axis, double offset = 0.0);
  /// The three-dimensional cone solution above.
  static OracleField alt_caffarelli(const AltCaffarelliProfile& p);
  /// Capacitor potential of the ring r_in < |x| < r_out: 1 inside, 0 outside,
  /// log-radial (2D) or 1/|x| (3D) in between, clamped to [0, 1].
  static OracleField annulus_capacitor(int dim, double r_in, double r_out);
  /// rho^(pi/opening) sin(pi (phi - start)/opening) on the sector
  /// start < phi < start + opening, zero elsewhere.
  static OracleField homogeneous_cone_2d(double opening, double start = 0.0);

  Tag tag() const { return tag_; }
  int dim() const { return dim_; }
  std::string name() const;

  double value(const Point& x) const;
  Point gradient(const Point& x) const;

  const AltCaffarelliProfile& profile() const { return profile_; }
  double r_in() const { return p0_; }
  double r_out() const { return p1_; }
  double opening() const { return p0_; }
  double start() const { return p1_; }

 private:
  OracleField(Tag t, int dim) : tag_(t), dim_(dim) {}

  Tag tag_;
  int dim_;
  Point vec_;        // linear coefficients or half-plane axis
  double s0_ = 0.0;  // constant, or slope a
  double s1_ = 0.0;  // offset
  double p0_ = 0.0, p1_ = 0.0;
  AltCaffarelliProfile profile_;
};

struct SampledOracle {
  ScalarField value;
  VectorField<double> gradient;  // analytic, valid everywhere
};

SampledOracle oracle_sample(const OracleField& o, const GridSpec& g);

struct Blowup {
  ScalarField field;       // x -> u(r x + y0) / r on the reference window
  bool normalized = true;  // false when u(y0) != 0: the caller should subtract it first
};

/// Reference window [-half_width, half_width]^n with spacing h_ref; the
/// physical window y0 + r * reference must lie inside u's grid.
Blowup blowup_rescale(const ScalarField& u, const BasePoint& y0, double r, double half_width = 1.0,
                      double h_ref = 1.0 / 32);

}  // namespace acflab
