#include "acflab/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <deque>

namespace acflab {

namespace {

template <typename Visit>
void for_each_neighbor(const GridSpec& g, Index i, Visit&& visit) {
  const MultiIndex m = g.multi(i);
  for (int k = 0; k < g.dim; ++k) {
    const Index s = g.stride(k);
    if (m[k] > 0) visit(i - s);
    if (m[k] < g.shape[k] - 1) visit(i + s);
  }
}

}  // namespace

DomainMask unknown_nodes(const DomainMask& mask) {
  const GridSpec& g = mask.grid();
  DomainMask out(g);
  for (Index i = 0; i < g.size(); ++i) out.set(i, mask[i] && !g.on_boundary(i));
  return out;
}

void require_connected_to_boundary(const DomainMask& mask) {
  const GridSpec& g = mask.grid();
  const DomainMask free = unknown_nodes(mask);
  require(!free.empty(), "Dirichlet problem: mask has no interior node");
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.size()), 0);
  std::deque<Index> queue;
  for (Index start = 0; start < g.size(); ++start) {
    if (!free[start] || seen[static_cast<std::size_t>(start)]) continue;
    bool anchored = false;
    seen[static_cast<std::size_t>(start)] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const Index i = queue.front();
      queue.pop_front();
      for_each_neighbor(g, i, [&](Index j) {
        if (!free[j]) {
          anchored = true;
        } else if (!seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          queue.push_back(j);
        }
      });
    }
    require(anchored, "Dirichlet problem: a component of the mask is disconnected from its boundary");
  }
}

Solution solve_dirichlet(const DirichletProblem& p, double residual_tol, Index max_iters) {
  const GridSpec& g = p.mask.grid();
  require(residual_tol > 0.0, "solve_dirichlet: residual_tol must be positive");
  require(max_iters > 0, "solve_dirichlet: max_iters must be positive");
  require(p.boundary_values.grid() == g, "solve_dirichlet: boundary data grid differs from mask grid");
  require(p.boundary_values.all_finite(), "solve_dirichlet: boundary data not finite");
  require(std::isfinite(p.rhs), "solve_dirichlet: rhs not finite");
  require_connected_to_boundary(p.mask);

  const DomainMask free = unknown_nodes(p.mask);
  std::vector<Index> slot(static_cast<std::size_t>(g.size()), -1);
  Index n = 0;
  for (Index i = 0; i < g.size(); ++i)
    if (free[i]) slot[static_cast<std::size_t>(i)] = n++;

  // Scaled by -h^2:  2n v_i - sum v_j = -h^2 rhs  (symmetric positive definite).
  const double h2 = g.spacing * g.spacing;
  const double diag = 2.0 * g.dim;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(2 * g.dim + 1));
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, -h2 * p.rhs);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index i = 0; i < g.size(); ++i) {
    const Index row = slot[static_cast<std::size_t>(i)];
    if (row < 0) continue;
    entries.emplace_back(row, row, diag);
    for_each_neighbor(g, i, [&](Index j) {
      const Index col = slot[static_cast<std::size_t>(j)];
      if (col >= 0) {
        entries.emplace_back(row, col, -1.0);
      } else {
        b[row] += p.boundary_values[j];
        lo = std::min(lo, p.boundary_values[j]);
        hi = std::max(hi, p.boundary_values[j]);
      }
    });
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(entries.begin(), entries.end());

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 0.5 * (lo + hi));
  SolveReport report;
  report.unknowns = n;
  auto max_residual = [&] { return (A * x - b).cwiseAbs().maxCoeff() / h2; };
  auto finish_step = [&] {
    if (p.rhs == 0.0) x = x.cwiseMax(lo).cwiseMin(hi);  // the exact discrete solution obeys the maximum principle
    report.final_residual = max_residual();
  };

  if (g.dim == 2) {
    // Planar lattices: a sparse factorisation is cheap, then refine.
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    require(ldlt.info() == Eigen::Success, "solve_dirichlet: factorisation failed");
    x = ldlt.solve(b);
    report.iterations = 1;
    finish_step();
    while (report.final_residual > residual_tol && report.iterations < std::min<Index>(max_iters, 8)) {
      x += ldlt.solve(b - A * x);
      ++report.iterations;
      finish_step();
    }
  } else {
    // CG stops on a relative 2-norm; the contract is a max-norm bound on the
    // Laplacian residual, so tighten until the latter holds.
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(A);
    const double bnorm = std::max(b.norm(), 1e-300);
    double rel = residual_tol * h2 * std::sqrt(static_cast<double>(n)) / bnorm;
    for (;;) {
      cg.setTolerance(std::max(rel, 1e-16));
      cg.setMaxIterations(std::max<Index>(1, max_iters - report.iterations));
      x = cg.solveWithGuess(b, x);
      report.iterations += cg.iterations();
      finish_step();
      if (report.final_residual <= residual_tol || report.iterations >= max_iters || rel <= 1e-16) break;
      rel *= 0.1;
    }
  }
  report.converged = report.final_residual <= residual_tol;

  ScalarField out = p.boundary_values;
  for (Index i = 0; i < g.size(); ++i)
    if (const Index s = slot[static_cast<std::size_t>(i)]; s >= 0) out[i] = x[s];
  return {std::move(out), report};
}

ScalarField build_G(const DomainMask& k, const BasePoint& y, const Point& axis, double residual_tol,
                    SolveReport* report) {
  const GridSpec& g = k.grid();
  require(axis.size() == g.dim && std::abs(axis.norm() - 1.0) < 1e-9, "build_G: axis must be a unit vector");
  require(!k[y.nearest], "build_G: the node nearest y must lie on the boundary of K (outside the open set)");
  double height = 0.0;
  for (Index i = 0; i < g.size(); ++i)
    if (k[i] && g.on_boundary(i)) height = std::max(height, (g.node(i) - y.y).dot(axis));
  require(height > 0.0, "build_G: K has no far boundary on the lattice faces");
  ScalarField data(g);
  for (Index i = 0; i < g.size(); ++i)
    if (k[i] && g.on_boundary(i)) data[i] = std::clamp((g.node(i) - y.y).dot(axis) / height, 0.0, 1.0);
  Solution s = solve_dirichlet({k, std::move(data), 0.0}, residual_tol);
  if (report) *report = s.report;
  return std::move(s.field);
}

DomainMask barrier_region(const DomainMask& k, const BasePoint& y, double r0) {
  return (!k) & ball_mask(k.grid(), y.y, r0);
}

ScalarField build_barrier(const DomainMask& k, const BasePoint& y, double r0, const ScalarField& outer_values,
                          double C, double residual_tol, SolveReport* report) {
  const GridSpec& g = k.grid();
  require(C >= 0.0, "build_barrier: C must be non-negative");
  require(r0 > 0.0 && g.contains_ball(y.y, r0), "build_barrier: ball B_r0(y) must lie inside the grid");
  require(outer_values.grid() == g, "build_barrier: outer values on a different grid");
  ScalarField data = outer_values;
  for (Index i = 0; i < g.size(); ++i)
    if (k[i]) data[i] = y.level;
  Solution s = solve_dirichlet({barrier_region(k, y, r0), std::move(data), -C}, residual_tol);
  if (report) *report = s.report;
  return std::move(s.field);
}

}  // namespace acflab
