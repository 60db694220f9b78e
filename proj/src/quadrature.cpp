#include "acflab/quadrature.hpp"

#include <vector>

namespace acflab {

namespace {

// Antiderivative of 1/|x| on the closed positive octant (d^3 F / dx dy dz = 1/|x|).
double octant_primitive(double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r == 0.0) return 0.0;
  auto log_term = [r](double coeff, double a) { return coeff == 0.0 ? 0.0 : coeff * std::log(a + r); };
  auto atan_term = [r](double a, double b, double c) {
    return a == 0.0 ? 0.0 : 0.5 * a * a * std::atan(b * c / (a * r));
  };
  return log_term(y * z, x) + log_term(x * z, y) + log_term(x * y, z) - atan_term(x, y, z) -
         atan_term(y, x, z) - atan_term(z, x, y);
}

double positive_box(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0.0;
  for (int c = 0; c < 8; ++c) {
    int ups = 0;
    std::array<double, 3> p{};
    for (int k = 0; k < 3; ++k) {
      const bool up = (c >> k) & 1;
      ups += up;
      p[k] = up ? b[k] : a[k];
    }
    s += ((3 - ups) % 2 == 0 ? 1.0 : -1.0) * octant_primitive(p[0], p[1], p[2]);
  }
  return s;
}

// [lo, hi] folded onto the non-negative half-line by reflection at 0.
std::vector<std::pair<double, double>> fold(double lo, double hi) {
  if (lo >= 0.0) return {{lo, hi}};
  if (hi <= 0.0) return {{-hi, -lo}};
  return {{0.0, -lo}, {0.0, hi}};
}

constexpr int kDefaultDepth2d = 5;
constexpr int kDefaultDepth3d = 3;

double cube_kernel_inside(int dim, const Point& rel, double side, double dist) {
  if (dim == 2) return side * side;
  if (dist < 2.5 * side) {
    std::array<double, 3> lo{}, hi{};
    for (int k = 0; k < 3; ++k) {
      lo[k] = rel[k] - 0.5 * side;
      hi[k] = rel[k] + 0.5 * side;
    }
    return inverse_distance_box_integral(lo, hi);
  }
  return side * side * side / dist;
}

}  // namespace

double inverse_distance_box_integral(const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  double total = 0.0;
  for (const auto& [a0, b0] : fold(lo[0], hi[0]))
    for (const auto& [a1, b1] : fold(lo[1], hi[1]))
      for (const auto& [a2, b2] : fold(lo[2], hi[2])) total += positive_box({a0, a1, a2}, {b0, b1, b2});
  return total;
}

double cube_ball_kernel_integral(int dim, const Point& rel, double side, double r, int depth) {
  if (depth < 0) depth = dim == 2 ? kDefaultDepth2d : kDefaultDepth3d;
  const double d = rel.norm();
  const double half_diag = 0.5 * side * std::sqrt(static_cast<double>(dim));
  if (d - half_diag >= r) return 0.0;
  if (d + half_diag <= r) return cube_kernel_inside(dim, rel, side, d);
  if (depth == 0) {
    // Leaf cut by the sphere: volume fraction from the signed distance of the
    // centre, exact for a face-parallel planar interface.
    const double fraction = std::clamp(0.5 - (d - r) / side, 0.0, 1.0);
    if (fraction == 0.0) return 0.0;
    const double vol = std::pow(side, dim);
    return fraction * (dim == 2 ? vol : vol / std::max(d, 0.25 * side));
  }
  double sum = 0.0;
  Point child(dim);
  const int children = 1 << dim;
  for (int c = 0; c < children; ++c) {
    for (int k = 0; k < dim; ++k) child[k] = rel[k] + (((c >> k) & 1) ? 0.25 : -0.25) * side;
    sum += cube_ball_kernel_integral(dim, child, 0.5 * side, r, depth - 1);
  }
  return sum;
}

double ball_kernel_quadrature(const GridSpec& lattice, const Point& center, double r) {
  double total = 0.0;
  for_each_ball_cell(lattice, center, r, [&](Index, double w) { total += w; });
  return total;
}

}  // namespace acflab
