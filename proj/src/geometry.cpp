#include "acflab/geometry.hpp"

#include "acflab/io.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

namespace acflab {

// ---------------------------------------------------------------------------
// Dini moduli

namespace {

// Adaptive Simpson on [a, b].
double simpson(const std::function<double(double)>& g, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol) {
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  return simpson(g, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

}  // namespace

DiniModulus::DiniModulus(Family f, double alpha, double coefficient, std::vector<double> t, std::vector<double> w)
    : family_(f), alpha_(alpha), coefficient_(coefficient), t_(std::move(t)), w_(std::move(w)) {
  const double q = dini_quadrature(1e-10);
  require(std::isfinite(q), "DiniModulus: Dini integral did not converge");
  switch (family_) {
    case Family::zero: dini_ = 0.0; break;
    case Family::hoelder: dini_ = coefficient_ / alpha_; break;
    case Family::log_squared: dini_ = 1.0; break;
    case Family::tabulated: dini_ = q; break;
  }
}

DiniModulus DiniModulus::zero() { return DiniModulus(Family::zero, 0.0, 0.0, {}, {}); }

DiniModulus DiniModulus::hoelder(double alpha, double coefficient) {
  require(alpha > 0.0 && alpha <= 1.0, "DiniModulus::hoelder: alpha must lie in (0, 1]");
  require(coefficient >= 0.0, "DiniModulus::hoelder: coefficient must be non-negative");
  return DiniModulus(Family::hoelder, alpha, coefficient, {}, {});
}

DiniModulus DiniModulus::log_squared() { return DiniModulus(Family::log_squared, 0.0, 1.0, {}, {}); }

DiniModulus DiniModulus::tabulated(std::vector<double> t, std::vector<double> w) {
  require(t.size() == w.size() && t.size() >= 2, "DiniModulus::tabulated: need >= 2 matching knots");
  require(t.front() == 0.0 && w.front() == 0.0, "DiniModulus::tabulated: w(0) must be 0");
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(t[i] > t[i - 1], "DiniModulus::tabulated: knots must increase");
    require(w[i] >= w[i - 1], "DiniModulus::tabulated: w must be nondecreasing");
  }
  return DiniModulus(Family::tabulated, 0.0, 0.0, std::move(t), std::move(w));
}

double DiniModulus::operator()(double t) const {
  require(t >= 0.0, "DiniModulus: negative argument");
  switch (family_) {
    case Family::zero: return 0.0;
    case Family::hoelder: return coefficient_ * std::pow(t, alpha_);
    case Family::log_squared: {
      if (t == 0.0) return 0.0;
      if (t >= 1.0) return 1.0;
      const double l = 1.0 - std::log(t);
      return 1.0 / (l * l);
    }
    case Family::tabulated: {
      if (t >= t_.back()) return w_.back();
      const auto it = std::upper_bound(t_.begin(), t_.end(), t);
      const auto k = static_cast<std::size_t>(it - t_.begin());
      const double s = (t - t_[k - 1]) / (t_[k] - t_[k - 1]);
      return w_[k - 1] + s * (w_[k] - w_[k - 1]);
    }
  }
  return 0.0;
}

double DiniModulus::of_log(double s) const {
  switch (family_) {
    case Family::zero: return 0.0;
    case Family::hoelder: return std::isinf(s) ? 0.0 : coefficient_ * std::exp(-alpha_ * s);
    case Family::log_squared: return std::isinf(s) ? 0.0 : 1.0 / ((1.0 + s) * (1.0 + s));
    case Family::tabulated: return std::isinf(s) ? 0.0 : (*this)(std::exp(-s));
  }
  return 0.0;
}

double DiniModulus::dini_quadrature(double tol) const {
  require(tol > 0.0, "dini_quadrature: tol must be positive");
  if (family_ == Family::zero) return 0.0;
  // t = e^{-s}, s = u / (1 - u): int_0^1 w(t)/t dt = int_0^1 w(e^{-s}) (1 + s)^2 du.
  auto g = [this](double u) {
    if (u >= 1.0) {
      // Limit of w(e^{-s}) (1 + s)^2 as s -> inf.
      return family_ == Family::log_squared ? 1.0 : 0.0;
    }
    const double s = u / (1.0 - u);
    return of_log(s) * (1.0 + s) * (1.0 + s);
  };
  return adaptive_simpson(g, 0.0, 1.0, tol);
}

std::string DiniModulus::name() const {
  switch (family_) {
    case Family::zero: return "zero";
    case Family::hoelder: return "hoelder";
    case Family::log_squared: return "log_squared";
    case Family::tabulated: return "tabulated";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Cones

TouchingCone::TouchingCone(Point apex_, Point axis_, DiniModulus modulus_, double reach_)
    : apex(std::move(apex_)), axis(std::move(axis_)), modulus(std::move(modulus_)), reach(reach_) {
  require(apex.size() == axis.size() && (apex.size() == 2 || apex.size() == 3),
          "TouchingCone: apex and axis must share dimension 2 or 3");
  require(std::abs(axis.norm() - 1.0) < 1e-9, "TouchingCone: axis must have unit length");
  require(reach > 0.0, "TouchingCone: reach must be positive");
}

double TouchingCone::margin(const Point& x) const {
  const Point d = x - apex;
  const double along = d.dot(axis);
  const double perp = (d - along * axis).norm();
  return along - perp * modulus(perp);
}

DomainMask cone_mask(const TouchingCone& c, const GridSpec& g) {
  require(c.apex.size() == g.dim, "cone_mask: dimension mismatch");
  require(g.contains(c.apex), "cone_mask: apex outside grid extent");
  return make_mask(g, [&](const Point& x) { return c.contains(x); });
}

// ---------------------------------------------------------------------------
// Level boundaries

namespace {

template <typename Above, typename Crossing>
void for_each_crossing(const GridSpec& g, Above above, Crossing crossing) {
  for (Index i = 0; i < g.size(); ++i) {
    const MultiIndex m = g.multi(i);
    for (int k = 0; k < g.dim; ++k) {
      if (m[k] + 1 >= g.shape[k]) continue;
      const Index j = i + g.stride(k);
      if (above(i) != above(j)) crossing(i, j, k);
    }
  }
}

// Buckets of side `cell` for nearest-point queries.
class PointIndex {
 public:
  explicit PointIndex(const LevelBoundary& b) : pts_(b.points), dim_(b.dim) {
    Point lo = pts_.front(), hi = pts_.front();
    for (const Point& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
    cell_ = extent / std::max(1.0, std::pow(static_cast<double>(pts_.size()), 1.0 / dim_));
    origin_ = lo;
    for (std::size_t i = 0; i < pts_.size(); ++i) buckets_[coords(pts_[i])].push_back(i);
    span_ = static_cast<long>(std::ceil(extent / cell_));
  }

  double nearest(const Point& p) const {
    const Key c = coords(p);
    long last = 0;
    for (int d = 0; d < dim_; ++d) last = std::max({last, std::abs(c[d]), std::abs(c[d] - span_)});
    double best = std::numeric_limits<double>::infinity();
    // A ring at Chebyshev radius k only holds points at distance >= (k - 1) * cell.
    for (long ring = 0; ring <= last; ++ring) {
      if (static_cast<double>(ring - 1) * cell_ > best) break;
      visit_ring(c, ring, [&](std::size_t i) { best = std::min(best, (pts_[i] - p).norm()); });
    }
    return best;
  }

 private:
  using Key = std::array<long, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(k[0] * 73856093L ^ k[1] * 19349663L ^ k[2] * 83492791L);
    }
  };

  Key coords(const Point& p) const {
    Key k{0, 0, 0};
    for (int d = 0; d < dim_; ++d) k[d] = static_cast<long>(std::floor((p[d] - origin_[d]) / cell_));
    return k;
  }
  template <typename Visit>
  void visit_ring(const Key& c, long ring, Visit&& visit) const {
    const long zr = dim_ == 3 ? ring : 0;
    for (long a = -ring; a <= ring; ++a)
      for (long b = -ring; b <= ring; ++b)
        for (long z = -zr; z <= zr; ++z) {
          const long cheb = std::max({std::abs(a), std::abs(b), std::abs(z)});
          if (cheb != ring) continue;
          const auto it = buckets_.find({c[0] + a, c[1] + b, c[2] + z});
          if (it == buckets_.end()) continue;
          for (std::size_t i : it->second) visit(i);
        }
  }

  const std::vector<Point>& pts_;
  int dim_;
  double cell_ = 1.0;
  Point origin_;
  long span_ = 1;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

double one_sided(const LevelBoundary& a, const LevelBoundary& b) {
  const PointIndex index(b);
  double sup = 0.0;
  for (const Point& p : a.points) sup = std::max(sup, index.nearest(p));
  return sup;
}

}  // namespace

LevelBoundary extract_level_boundary(const ScalarField& f, double level) {
  const GridSpec& g = f.grid();
  require(f.all_finite(), "extract_level_boundary: field not finite");
  LevelBoundary out{level, g.dim, {}};
  for_each_crossing(
      g, [&](Index i) { return f[i] > level; },
      [&](Index i, Index j, int) {
        const double t = (level - f[i]) / (f[j] - f[i]);
        out.points.push_back(g.node(i) + t * (g.node(j) - g.node(i)));
      });
  return out;
}

LevelBoundary mask_boundary(const DomainMask& m) {
  const GridSpec& g = m.grid();
  LevelBoundary out{0.5, g.dim, {}};
  for_each_crossing(
      g, [&](Index i) { return m[i]; },
      [&](Index i, Index j, int) { out.points.push_back(0.5 * (g.node(i) + g.node(j))); });
  return out;
}

HausdorffDistance hausdorff_distance(const LevelBoundary& a, const LevelBoundary& b) {
  require(!a.empty() && !b.empty(), "hausdorff_distance: empty boundary");
  require(a.dim == b.dim, "hausdorff_distance: dimension mismatch");
  HausdorffDistance out;
  out.one_sided = one_sided(a, b);
  out.symmetric = std::max(out.one_sided, one_sided(b, a));
  return out;
}

double distance_to(const LevelBoundary& b, const Point& p) {
  require(!b.empty(), "distance_to: empty boundary");
  return PointIndex(b).nearest(p);
}

void write_boundary_csv(std::ostream& os, const LevelBoundary& b) {
  std::vector<std::string> header{"x", "y"};
  if (b.dim == 3) header.push_back("z");
  std::vector<std::vector<double>> rows;
  rows.reserve(b.points.size());
  for (const Point& p : b.points) rows.emplace_back(p.data(), p.data() + p.size());
  write_csv(os, header, rows);
}

// ---------------------------------------------------------------------------
// Exterior touching

namespace {

template <typename Above, typename CrossingPoint>
TouchVerdict touch_core(const GridSpec& g, const Point& y, const TouchingCone& c, double tol, Above above,
                        CrossingPoint crossing_point) {
  require(c.apex.size() == g.dim, "verify_exterior_touch: dimension mismatch");
  require((c.apex - y).norm() <= 1e-12, "verify_exterior_touch: cone apex must be the base point");
  TouchVerdict v;
  const double h = g.spacing;
  const double reach = c.reach;
  MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < g.dim; ++k) {
    lo[k] = std::max<Index>(0, static_cast<Index>(std::floor((y[k] - reach - g.origin[k]) / h)));
    hi[k] = std::min<Index>(g.shape[k] - 1, static_cast<Index>(std::ceil((y[k] + reach - g.origin[k]) / h)));
  }
  const double near = h * std::sqrt(static_cast<double>(g.dim)) + tol;
  double closest = std::numeric_limits<double>::infinity();
  MultiIndex m{0, 0, 0};
  for (m[0] = lo[0]; m[0] <= hi[0]; ++m[0])
    for (m[1] = lo[1]; m[1] <= hi[1]; ++m[1])
      for (m[2] = lo[2]; m[2] <= hi[2]; ++m[2]) {
        const Index i = g.linear(m);
        const Point x = g.node(m);
        const double r = (x - y).norm();
        if (r >= reach) continue;
        if (above(i)) {
          const double margin = c.margin(x);
          if (margin > tol) {
            ++v.violations;
            if (margin > v.worst_margin) {
              v.worst_margin = margin;
              v.worst_node = i;
            }
          }
        }
        if (r <= near + h) {
          for (int k = 0; k < g.dim; ++k) {
            if (m[k] + 1 >= g.shape[k]) continue;
            const Index j = i + g.stride(k);
            if (above(i) != above(j)) closest = std::min(closest, (crossing_point(i, j) - y).norm());
          }
        }
      }
  v.on_boundary = closest <= near;
  v.pass = v.on_boundary && v.violations == 0;
  return v;
}

}  // namespace

TouchVerdict verify_exterior_touch(const ScalarField& f, const BasePoint& y, const TouchingCone& c, double tol) {
  const GridSpec& g = f.grid();
  const double level = y.level;
  return touch_core(
      g, y.y, c, tol, [&](Index i) { return f[i] > level; },
      [&](Index i, Index j) {
        const double t = (level - f[i]) / (f[j] - f[i]);
        return Point(g.node(i) + t * (g.node(j) - g.node(i)));
      });
}

TouchVerdict verify_exterior_touch(const DomainMask& domain, const Point& y, const TouchingCone& c, double tol) {
  const GridSpec& g = domain.grid();
  return touch_core(
      g, y, c, tol, [&](Index i) { return domain[i]; },
      [&](Index i, Index j) { return Point(0.5 * (g.node(i) + g.node(j))); });
}

std::vector<Point> search_directions(int dim, int count) {
  require(dim == 2 || dim == 3, "search_directions: dim must be 2 or 3");
  require(count >= 4, "search_directions: need at least 4 directions");
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      out.push_back(make_point({std::cos(a), std::sin(a)}));
    }
    return out;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double rho = std::sqrt(1.0 - z * z);
    out.push_back(make_point({rho * std::cos(golden * k), rho * std::sin(golden * k), z}));
  }
  return out;
}

namespace {

template <typename Verify>
AxisSearch axis_search(int dim, const Point& y, const DiniModulus& w, double reach, int count, Verify verify) {
  AxisSearch out;
  Point sum = Point::Zero(dim);
  bool have_best = false;
  for (const Point& e : search_directions(dim, count)) {
    ++out.tried;
    const TouchVerdict v = verify(TouchingCone(y, e, w, reach));
    if (v.pass) {
      sum += e;
      if (!out.found) {
        out.found = true;
        out.axis = e;
        out.verdict = v;
      }
    } else if (!out.found && (!have_best || v.violations < out.verdict.violations)) {
      have_best = true;
      out.axis = e;
      out.verdict = v;
    }
  }
  if (out.found && sum.norm() > 1e-12) {
    const Point mid = sum.normalized();
    ++out.tried;
    const TouchVerdict v = verify(TouchingCone(y, mid, w, reach));
    if (v.pass) {
      out.axis = mid;
      out.verdict = v;
    }
  }
  return out;
}

}  // namespace

AxisSearch find_touching_axis(const ScalarField& f, const BasePoint& y, const DiniModulus& w, double reach,
                              double tol, int count) {
  return axis_search(f.grid().dim, y.y, w, reach, count,
                     [&](const TouchingCone& c) { return verify_exterior_touch(f, y, c, tol); });
}

AxisSearch find_touching_axis(const DomainMask& domain, const Point& y, const DiniModulus& w, double reach,
                              double tol, int count) {
  return axis_search(domain.grid().dim, y, w, reach, count,
                     [&](const TouchingCone& c) { return verify_exterior_touch(domain, y, c, tol); });
}

}  // namespace acflab
