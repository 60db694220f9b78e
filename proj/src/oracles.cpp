#include "acflab/oracles.hpp"

#include <cmath>
#include <numbers>

namespace acflab {

double AltCaffarelliProfile::f(double theta) {
  const double c = std::cos(theta);
  return 2.0 + c * std::log((1.0 - c) / (1.0 + c));
}

double AltCaffarelliProfile::fprime(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return -s * std::log((1.0 - c) / (1.0 + c)) + 2.0 * c / s;
}

AltCaffarelliProfile ac_profile_build(double root_tol, double lo, double hi) {
  require(root_tol > 0.0, "ac_profile_build: root_tol must be positive");
  require(lo < hi, "ac_profile_build: empty bracket");
  using P = AltCaffarelliProfile;
  double flo = P::f(lo), fhi = P::f(hi);
  if (!(flo * fhi < 0.0)) throw OracleError("ac_profile_build: f has no sign change on the bracket");
  for (int it = 0; it < 200 && hi - lo > root_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = P::f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  P p;
  p.theta0 = 0.5 * (lo + hi);
  p.fprime_theta0 = P::fprime(p.theta0);
  return p;
}

OdeResidual ac_ode_residual(const AltCaffarelliProfile&, const std::vector<double>& theta_samples) {
  using P = AltCaffarelliProfile;
  OdeResidual out;
  out.empty = theta_samples.empty();
  const double step = 1e-4;
  auto flux = [](double t) { return std::sin(t) * P::fprime(t); };
  for (double t : theta_samples) {
    require(t > 0.05 && t < std::numbers::pi - 0.05, "ac_ode_residual: sample too close to the axis");
    const double d = (flux(t + step) - flux(t - step)) / (2.0 * step);
    out.max_residual = std::max(out.max_residual, std::abs(d + 2.0 * std::sin(t) * P::f(t)));
  }
  return out;
}

OracleField OracleField::linear(Point a, double c) {
  require(a.size() == 2 || a.size() == 3, "OracleField::linear: dimension must be 2 or 3");
  OracleField o(Tag::linear, static_cast<int>(a.size()));
  o.vec_ = std::move(a);
  o.s0_ = c;
  return o;
}

OracleField OracleField::half_plane_linear(double a, Point axis, double offset) {
  require(axis.size() == 2 || axis.size() == 3, "OracleField::half_plane_linear: dimension must be 2 or 3");
  require(std::abs(axis.norm() - 1.0) < 1e-12, "OracleField::half_plane_linear: axis must be a unit vector");
  OracleField o(Tag::half_plane_linear, static_cast<int>(axis.size()));
  o.vec_ = std::move(axis);
  o.s0_ = a;
  o.s1_ = offset;
  return o;
}

OracleField OracleField::alt_caffarelli(const AltCaffarelliProfile& p) {
  require(p.theta0 > 0.0 && p.theta0 < 0.5 * std::numbers::pi, "OracleField::alt_caffarelli: bad profile");
  OracleField o(Tag::alt_caffarelli, 3);
  o.profile_ = p;
  return o;
}

OracleField OracleField::annulus_capacitor(int dim, double r_in, double r_out) {
  require(dim == 2 || dim == 3, "OracleField::annulus_capacitor: dimension must be 2 or 3");
  require(0.0 < r_in && r_in < r_out, "OracleField::annulus_capacitor: need 0 < r_in < r_out");
  OracleField o(Tag::annulus_capacitor, dim);
  o.p0_ = r_in;
  o.p1_ = r_out;
  return o;
}

OracleField OracleField::homogeneous_cone_2d(double opening, double start) {
  require(opening > 0.0 && opening <= 2.0 * std::numbers::pi,
          "OracleField::homogeneous_cone_2d: opening must lie in (0, 2 pi]");
  OracleField o(Tag::homogeneous_cone_2d, 2);
  o.p0_ = opening;
  o.p1_ = start;
  return o;
}

std::string OracleField::name() const {
  switch (tag_) {
    case Tag::linear: return "linear";
    case Tag::half_plane_linear: return "half-plane";
    case Tag::alt_caffarelli: return "alt-caffarelli";
    case Tag::annulus_capacitor: return "annulus";
    case Tag::homogeneous_cone_2d: return "homogeneous-cone";
  }
  return "?";
}

namespace {

// Angle of (x, y) measured from `start`, in [0, 2 pi).
double angle_from(double x, double y, double start) {
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(std::atan2(y, x) - start, two_pi);
  if (a < 0.0) a += two_pi;
  return a;
}

}  // namespace

double OracleField::value(const Point& x) const {
  require(x.size() == dim_, "OracleField: dimension mismatch");
  switch (tag_) {
    case Tag::linear: return vec_.dot(x) + s0_;
    case Tag::half_plane_linear: return s0_ * std::max(vec_.dot(x) - s1_, 0.0);
    case Tag::alt_caffarelli: {
      const double r = x.norm();
      if (r == 0.0) return 0.0;
      const double theta = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
      if (theta <= profile_.theta0 || theta >= std::numbers::pi - profile_.theta0) return 0.0;
      return r * std::max(profile_.g(theta), 0.0);
    }
    case Tag::annulus_capacitor: {
      const double r = x.norm();
      if (r <= p0_) return 1.0;
      if (r >= p1_) return 0.0;
      if (dim_ == 2) return std::log(r / p1_) / std::log(p0_ / p1_);
      return (1.0 / r - 1.0 / p1_) / (1.0 / p0_ - 1.0 / p1_);
    }
    case Tag::homogeneous_cone_2d: {
      const double rho = x.norm();
      const double a = angle_from(x[0], x[1], p1_);
      if (rho == 0.0 || a >= p0_) return 0.0;
      const double k = std::numbers::pi / p0_;
      return std::pow(rho, k) * std::sin(k * a);
    }
  }
  return 0.0;
}

Point OracleField::gradient(const Point& x) const {
  require(x.size() == dim_, "OracleField: dimension mismatch");
  Point grad = Point::Zero(dim_);
  switch (tag_) {
    case Tag::linear: return vec_;
    case Tag::half_plane_linear:
      if (vec_.dot(x) - s1_ > 0.0) grad = s0_ * vec_;
      return grad;
    case Tag::alt_caffarelli: {
      const double r = x.norm();
      if (r == 0.0) return grad;
      const double theta = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
      if (theta <= profile_.theta0 || theta >= std::numbers::pi - profile_.theta0) return grad;
      const double rho = std::hypot(x[0], x[1]);
      const double cphi = x[0] / rho, sphi = x[1] / rho;
      const Point e_r = x / r;
      const Point e_t = make_point({cphi * std::cos(theta), sphi * std::cos(theta), -std::sin(theta)});
      return profile_.g(theta) * e_r + profile_.gprime(theta) * e_t;
    }
    case Tag::annulus_capacitor: {
      const double r = x.norm();
      if (r <= p0_ || r >= p1_) return grad;
      if (dim_ == 2) return x / (r * r * std::log(p0_ / p1_));
      return -x / (r * r * r * (1.0 / p0_ - 1.0 / p1_));
    }
    case Tag::homogeneous_cone_2d: {
      const double rho = x.norm();
      const double a = angle_from(x[0], x[1], p1_);
      if (rho == 0.0 || a >= p0_) return grad;
      const double k = std::numbers::pi / p0_;
      const double phi = std::atan2(x[1], x[0]);
      const double dr = k * std::pow(rho, k - 1.0) * std::sin(k * a);
      const double dt = k * std::pow(rho, k - 1.0) * std::cos(k * a);  // (1/rho) d/dphi
      return make_point({dr * std::cos(phi) - dt * std::sin(phi), dr * std::sin(phi) + dt * std::cos(phi)});
    }
  }
  return grad;
}

SampledOracle oracle_sample(const OracleField& o, const GridSpec& g) {
  require(g.dim == o.dim(), "oracle_sample: grid dimension does not match the oracle");
  SampledOracle out{ScalarField(g), VectorField<double>{g, Eigen::MatrixXd::Zero(g.dim, g.size()),
                                                        std::vector<std::uint8_t>(static_cast<std::size_t>(g.size()), 1)}};
  for (Index i = 0; i < g.size(); ++i) {
    const Point x = g.node(i);
    out.value[i] = o.value(x);
    out.gradient.components.col(i) = o.gradient(x);
  }
  return out;
}

Blowup blowup_rescale(const ScalarField& u, const BasePoint& y0, double r, double half_width, double h_ref) {
  const GridSpec& g = u.grid();
  require(r > 0.0 && half_width > 0.0 && h_ref > 0.0, "blowup_rescale: r, window and spacing must be positive");
  const GridSpec ref = GridSpec::cube(g.dim, -half_width, half_width, h_ref);
  require(g.contains(y0.y, r * ref.upper().maxCoeff() * (1.0 - 1e-12)), "blowup_rescale: rescaled window exits the grid");
  Blowup out{ScalarField(ref), true};
  for (Index i = 0; i < ref.size(); ++i) out.field[i] = interpolate(u, Point(y0.y + r * ref.node(i))) / r;
  const double scale = u.values().cwiseAbs().maxCoeff();
  out.normalized = std::abs(y0.level) <= 1e-12 * std::max(scale, 1e-300);
  return out;
}

}  // namespace acflab
