#pragma once

// Uniform Cartesian lattices in two or three dimensions, node-centred scalar
// fields, boolean masks and the finite-difference stencils everything else
// in acflab is built on.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace acflab {

using Index = std::ptrdiff_t;
using MultiIndex = std::array<Index, 3>;

/// Coordinates of a point in R^2 or R^3 (never allocates).
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Broken precondition on the caller's side.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

inline Point make_point(std::initializer_list<double> coords) {
  Point p(static_cast<Index>(coords.size()));
  Index i = 0;
  for (double c : coords) p[i++] = c;
  return p;
}

/// Node lattice: `shape[k]` nodes along axis k, spacing h, node 0 at `origin`.
/// Unused axes (k >= dim) have shape 1.
struct GridSpec {
  int dim = 2;
  MultiIndex shape{1, 1, 1};
  double spacing = 1.0;
  Point origin = Point::Zero(2);

  GridSpec() = default;
  GridSpec(int dim_, MultiIndex shape_, double spacing_, Point origin_)
      : dim(dim_), shape(shape_), spacing(spacing_), origin(std::move(origin_)) {
    validate();
  }

  /// Cube [lower, upper]^dim with nodes on both faces. The extent is rounded
  /// outward to a whole number of cells.
  static GridSpec cube(int dim, double lower, double upper, double h) {
    require(upper > lower, "GridSpec::cube: empty extent");
    const auto cells = static_cast<Index>(std::ceil((upper - lower) / h - 1e-9));
    MultiIndex shape{1, 1, 1};
    for (int k = 0; k < dim; ++k) shape[k] = cells + 1;
    return GridSpec(dim, shape, h, Point::Constant(dim, lower));
  }

  void validate() const {
    require(dim == 2 || dim == 3, "GridSpec: dim must be 2 or 3");
    require(spacing > 0.0 && std::isfinite(spacing), "GridSpec: spacing must be positive");
    require(origin.size() == dim, "GridSpec: origin has wrong dimension");
    for (int k = 0; k < 3; ++k) {
      if (k < dim)
        require(shape[k] >= 3, "GridSpec: every axis needs at least 3 nodes");
      else
        require(shape[k] == 1, "GridSpec: unused axes must have shape 1");
    }
  }

  Index size() const { return shape[0] * shape[1] * shape[2]; }

  /// Row-major (last axis fastest).
  Index stride(int axis) const {
    Index s = 1;
    for (int k = 2; k > axis; --k) s *= shape[k];
    return s;
  }

  Index linear(const MultiIndex& m) const { return (m[0] * shape[1] + m[1]) * shape[2] + m[2]; }

  MultiIndex multi(Index i) const {
    MultiIndex m{0, 0, 0};
    m[2] = i % shape[2];
    i /= shape[2];
    m[1] = i % shape[1];
    m[0] = i / shape[1];
    return m;
  }

  Point node(const MultiIndex& m) const {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = origin[k] + static_cast<double>(m[k]) * spacing;
    return p;
  }
  Point node(Index i) const { return node(multi(i)); }

  Point upper() const {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = origin[k] + static_cast<double>(shape[k] - 1) * spacing;
    return p;
  }

  bool on_boundary(const MultiIndex& m) const {
    for (int k = 0; k < dim; ++k)
      if (m[k] == 0 || m[k] == shape[k] - 1) return true;
    return false;
  }
  bool on_boundary(Index i) const { return on_boundary(multi(i)); }

  /// Closed physical extent.
  bool contains(const Point& p, double margin = 0.0) const {
    const Point hi = upper();
    for (int k = 0; k < dim; ++k)
      if (p[k] < origin[k] + margin || p[k] > hi[k] - margin) return false;
    return true;
  }

  /// Closed ball B_r(center) lies inside the extent.
  bool contains_ball(const Point& center, double r) const { return contains(center, r); }

  Index nearest(const Point& p) const {
    MultiIndex m{0, 0, 0};
    for (int k = 0; k < dim; ++k) {
      const auto idx = static_cast<Index>(std::lround((p[k] - origin[k]) / spacing));
      m[k] = std::clamp<Index>(idx, 0, shape[k] - 1);
    }
    return linear(m);
  }

  /// The lattice of cell centres between neighbouring nodes along `axis`
  /// (one staggered cell per lattice edge).
  GridSpec staggered(int axis) const {
    GridSpec s = *this;
    s.shape[axis] -= 1;
    s.origin[axis] += 0.5 * spacing;
    return s;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dim == b.dim && a.shape == b.shape && a.spacing == b.spacing && a.origin == b.origin;
  }
  friend bool operator!=(const GridSpec& a, const GridSpec& b) { return !(a == b); }
};

/// One value per lattice node.
template <typename Scalar>
class Field {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Field() = default;
  explicit Field(GridSpec grid, Scalar fill = Scalar(0))
      : grid_(std::move(grid)), values_(Vector::Constant(grid_.size(), fill)) {}
  Field(GridSpec grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == grid_.size(), "Field: value count does not match grid");
  }

  const GridSpec& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  Scalar operator[](Index i) const { return values_[i]; }
  Scalar& operator[](Index i) { return values_[i]; }
  Scalar at(const MultiIndex& m) const { return values_[grid_.linear(m)]; }

  Index size() const { return values_.size(); }
  bool all_finite() const { return values_.allFinite(); }

 private:
  GridSpec grid_;
  Vector values_;
};

using ScalarField = Field<double>;

/// Sample `f(Point)` at every node.
template <typename Scalar = double, typename Fn>
Field<Scalar> sample(const GridSpec& grid, Fn&& f) {
  Field<Scalar> out(grid);
  for (Index i = 0; i < grid.size(); ++i) out[i] = static_cast<Scalar>(f(grid.node(i)));
  return out;
}

class DomainMask {
 public:
  DomainMask() = default;
  explicit DomainMask(GridSpec grid, bool fill = false)
      : grid_(std::move(grid)), inside_(static_cast<std::size_t>(grid_.size()), fill ? 1 : 0) {}

  const GridSpec& grid() const { return grid_; }
  bool operator[](Index i) const { return inside_[static_cast<std::size_t>(i)] != 0; }
  void set(Index i, bool v) { inside_[static_cast<std::size_t>(i)] = v ? 1 : 0; }
  Index size() const { return static_cast<Index>(inside_.size()); }

  Index count() const {
    Index c = 0;
    for (auto v : inside_) c += v;
    return c;
  }
  bool empty() const { return count() == 0; }

  DomainMask operator&(const DomainMask& o) const { return combine(o, [](bool a, bool b) { return a && b; }); }
  DomainMask operator|(const DomainMask& o) const { return combine(o, [](bool a, bool b) { return a || b; }); }
  DomainMask operator!() const {
    DomainMask out(grid_);
    for (Index i = 0; i < size(); ++i) out.set(i, !(*this)[i]);
    return out;
  }

  friend bool operator==(const DomainMask& a, const DomainMask& b) {
    return a.grid_ == b.grid_ && a.inside_ == b.inside_;
  }

 private:
  template <typename Op>
  DomainMask combine(const DomainMask& o, Op op) const {
    require(grid_ == o.grid_, "DomainMask: grid mismatch");
    DomainMask out(grid_);
    for (Index i = 0; i < size(); ++i) out.set(i, op((*this)[i], o[i]));
    return out;
  }

  GridSpec grid_;
  std::vector<std::uint8_t> inside_;
};

template <typename Fn>
DomainMask make_mask(const GridSpec& grid, Fn&& predicate) {
  DomainMask m(grid);
  for (Index i = 0; i < grid.size(); ++i) m.set(i, predicate(grid.node(i)));
  return m;
}

inline DomainMask ball_mask(const GridSpec& grid, const Point& center, double r) {
  return make_mask(grid, [&](const Point& x) { return (x - center).norm() < r; });
}

/// Multilinear interpolation at an arbitrary point of the extent.
template <typename Scalar>
Scalar interpolate(const Field<Scalar>& f, const Point& p) {
  const GridSpec& g = f.grid();
  require(g.contains(p, -1e-12 * g.spacing), "interpolate: point outside grid extent");
  MultiIndex base{0, 0, 0};
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (int k = 0; k < g.dim; ++k) {
    const double s = (p[k] - g.origin[k]) / g.spacing;
    auto i = static_cast<Index>(std::floor(s));
    i = std::clamp<Index>(i, 0, g.shape[k] - 2);
    base[k] = i;
    t[k] = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
  }
  Scalar acc(0);
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    MultiIndex m = base;
    double w = 1.0;
    for (int k = 0; k < g.dim; ++k) {
      const bool up = (c >> k) & 1;
      m[k] += up ? 1 : 0;
      w *= up ? t[k] : 1.0 - t[k];
    }
    if (w != 0.0) acc += static_cast<Scalar>(w) * f.at(m);
  }
  return acc;
}

/// A base point y of the super-level construction together with u(y).
struct BasePoint {
  Point y;
  double level = 0.0;
  Index nearest = 0;
};

inline BasePoint make_base_point(const ScalarField& f, const Point& y) {
  const GridSpec& g = f.grid();
  require(y.size() == g.dim, "BasePoint: dimension mismatch");
  require(g.contains(y, 0.0), "BasePoint: point outside grid extent");
  return BasePoint{y, interpolate(f, y), g.nearest(y)};
}

/// Base point with a known level (an analytic value). Multilinear
/// interpolation is O(h) off at a kink of the field, which matters when y sits
/// on a free boundary.
inline BasePoint make_base_point(const ScalarField& f, const Point& y, double level) {
  BasePoint b = make_base_point(f, y);
  b.level = level;
  return b;
}

/// Gradient samples; `valid[i] == 0` marks nodes where no stencil fits.
template <typename Scalar>
struct VectorField {
  GridSpec grid;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> components;  // dim x nodes
  std::vector<std::uint8_t> valid;

  auto at(Index i) const { return components.col(i); }
  bool is_valid(Index i) const { return valid[static_cast<std::size_t>(i)] != 0; }
};

/// Centred differences where both neighbours along an axis lie in the mask,
/// one-sided where only one does. Nodes outside the mask, or with an axis
/// lacking any inside neighbour, are flagged invalid.
template <typename Scalar>
VectorField<Scalar> discrete_gradient(const Field<Scalar>& f, const DomainMask& mask) {
  const GridSpec& g = f.grid();
  require(mask.grid() == g, "discrete_gradient: mask grid does not match field grid");
  VectorField<Scalar> out{g, decltype(VectorField<Scalar>::components)::Zero(g.dim, g.size()),
                          std::vector<std::uint8_t>(static_cast<std::size_t>(g.size()), 0)};
  const Scalar inv_h = Scalar(1) / static_cast<Scalar>(g.spacing);
  for (Index i = 0; i < g.size(); ++i) {
    if (!mask[i]) continue;
    const MultiIndex m = g.multi(i);
    bool ok = true;
    for (int k = 0; k < g.dim && ok; ++k) {
      const Index s = g.stride(k);
      const bool lo = m[k] > 0 && mask[i - s];
      const bool hi = m[k] < g.shape[k] - 1 && mask[i + s];
      if (lo && hi)
        out.components(k, i) = (f[i + s] - f[i - s]) * inv_h / Scalar(2);
      else if (hi)
        out.components(k, i) = (f[i + s] - f[i]) * inv_h;
      else if (lo)
        out.components(k, i) = (f[i] - f[i - s]) * inv_h;
      else
        ok = false;
    }
    if (ok) out.valid[static_cast<std::size_t>(i)] = 1;
    else out.components.col(i).setZero();
  }
  return out;
}

template <typename Scalar>
VectorField<Scalar> discrete_gradient(const Field<Scalar>& f) {
  return discrete_gradient(f, DomainMask(f.grid(), true));
}

/// Interior-node Laplacian; `defined` is false on the lattice boundary,
/// where `values` holds 0.
template <typename Scalar>
struct StencilResult {
  Field<Scalar> values;
  DomainMask defined;
};

template <typename Scalar>
StencilResult<Scalar> discrete_laplacian(const Field<Scalar>& f) {
  const GridSpec& g = f.grid();
  StencilResult<Scalar> out{Field<Scalar>(g), DomainMask(g)};
  const Scalar inv_h2 = Scalar(1) / static_cast<Scalar>(g.spacing * g.spacing);
  for (Index i = 0; i < g.size(); ++i) {
    if (g.on_boundary(i)) continue;
    Scalar acc = Scalar(-2 * g.dim) * f[i];
    for (int k = 0; k < g.dim; ++k) {
      const Index s = g.stride(k);
      acc += f[i + s] + f[i - s];
    }
    out.values[i] = acc * inv_h2;
    out.defined.set(i, true);
  }
  return out;
}

/// Nodes with f strictly above the level through y.
inline DomainMask superlevel_mask(const ScalarField& f, const BasePoint& y) {
  DomainMask m(f.grid());
  for (Index i = 0; i < f.size(); ++i) m.set(i, f[i] > y.level);
  return m;
}

/// max(f - f(y), 0) nodewise.
inline ScalarField positive_part_shift(const ScalarField& f, const BasePoint& y) {
  ScalarField out(f.grid());
  out.values() = (f.values().array() - y.level).max(0.0).matrix();
  return out;
}

struct SubsolutionVerdict {
  bool pass = true;
  Index worst_node = -1;
  double worst_value = std::numeric_limits<double>::infinity();
};

/// Passes iff the discrete Laplacian is >= lower_bound - tol at every interior
/// node (restricted to `region` when given).
inline SubsolutionVerdict check_subsolution(const ScalarField& f, double lower_bound, double tol,
                                            const DomainMask* region = nullptr) {
  require(tol >= 0.0, "check_subsolution: tol must be non-negative");
  if (region) require(region->grid() == f.grid(), "check_subsolution: region grid mismatch");
  const auto lap = discrete_laplacian(f);
  SubsolutionVerdict v;
  for (Index i = 0; i < f.size(); ++i) {
    if (!lap.defined[i] || (region && !(*region)[i])) continue;
    if (lap.values[i] < v.worst_value) {
      v.worst_value = lap.values[i];
      v.worst_node = i;
    }
  }
  v.pass = v.worst_node < 0 || v.worst_value >= lower_bound - tol;
  return v;
}

}  // namespace acflab
