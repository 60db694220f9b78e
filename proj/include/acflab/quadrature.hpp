#pragma once

// Cell-wise quadrature of the radial kernel |x - c|^{2-n} over a ball.
//
// Every lattice node owns the cube of side h centred on it. For a ball
// B_r(c) each cube receives the weight
//
//     w = integral over (cube ∩ B_r(c)) of |x - c|^{2-n} dx.
//
// Cubes strictly inside the ball use the exact cube integral when they sit
// next to the singular point (3D) and the midpoint rule otherwise; cubes cut
// by the sphere are bisected recursively down to a fixed depth.

#include "acflab/grid.hpp"

namespace acflab {

/// |x|^{2-n} at distance `dist`: 1 in 2D, 1/dist in 3D.
inline double radial_kernel(int dim, double dist) { return dim == 2 ? 1.0 : 1.0 / dist; }

/// Exact integral of 1/|x| over the box [lo, hi] (3D, coordinates relative to
/// the singular point; the box may contain it).
double inverse_distance_box_integral(const std::array<double, 3>& lo, const std::array<double, 3>& hi);

/// Integral of the kernel over the cube of side `side` centred at `rel`
/// (relative to the singular point) intersected with B_r(0).
double cube_ball_kernel_integral(int dim, const Point& rel, double side, double r, int depth = -1);

/// Calls visit(cell_index, weight) for every cell of `lattice` meeting B_r(center).
template <typename Visit>
void for_each_ball_cell(const GridSpec& lattice, const Point& center, double r, Visit&& visit) {
  const int n = lattice.dim;
  const double h = lattice.spacing;
  MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const double a = (center[k] - r - 0.5 * h - lattice.origin[k]) / h;
    const double b = (center[k] + r + 0.5 * h - lattice.origin[k]) / h;
    lo[k] = std::max<Index>(0, static_cast<Index>(std::ceil(a)));
    hi[k] = std::min<Index>(lattice.shape[k] - 1, static_cast<Index>(std::floor(b)));
    if (lo[k] > hi[k]) return;
  }
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(n));
  Point rel(n);
  MultiIndex m{0, 0, 0};
  for (m[0] = lo[0]; m[0] <= hi[0]; ++m[0])
    for (m[1] = lo[1]; m[1] <= hi[1]; ++m[1])
      for (m[2] = (n == 3 ? lo[2] : 0); m[2] <= (n == 3 ? hi[2] : 0); ++m[2]) {
        for (int k = 0; k < n; ++k) rel[k] = lattice.origin[k] + static_cast<double>(m[k]) * h - center[k];
        const double d = rel.norm();
        if (d - half_diag >= r) continue;
        const double w = cube_ball_kernel_integral(n, rel, h, r);
        if (w > 0.0) visit(lattice.linear(m), w);
      }
}

/// Sum of all cell weights of `lattice` for B_r(center): a grid quadrature of
/// the kernel integral over the ball.
double ball_kernel_quadrature(const GridSpec& lattice, const Point& center, double r);

}  // namespace acflab
