#pragma once

// Dirichlet problems for the 2n+1-point Laplacian on masked lattices.
//
// The unknowns are the mask nodes off the lattice boundary. Every other node
// is fixed at its boundary value, so a problem is fully described by the mask,
// one field of boundary data and a constant right-hand side.

#include "acflab/grid.hpp"

namespace acflab {

struct DirichletProblem {
  DomainMask mask;
  ScalarField boundary_values;
  double rhs = 0.0;  // solve  Δv = rhs
};

struct SolveReport {
  Index iterations = 0;
  double final_residual = 0.0;  // max |Δv - rhs| over the unknowns
  bool converged = false;
  Index unknowns = 0;
};

struct Solution {
  ScalarField field;
  SolveReport report;
};

/// Mask nodes that are solved for.
DomainMask unknown_nodes(const DomainMask& mask);

/// Throws ContractViolation if a connected component of the unknowns touches
/// no fixed node (the system would be singular).
void require_connected_to_boundary(const DomainMask& mask);

Solution solve_dirichlet(const DirichletProblem& p, double residual_tol = 1e-8, Index max_iters = 20000);

/// Harmonic G in K with G = 0 off K (in particular at y) and, on lattice
/// boundary nodes inside K, the ramp clamp(<x - y, axis> / L, 0, 1) where L is
/// the largest such height. On a half-space this reproduces <x - y, axis>/L.
ScalarField build_G(const DomainMask& k, const BasePoint& y, const Point& axis, double residual_tol = 1e-8,
                    SolveReport* report = nullptr);

/// The region K^c ∩ B_r0(y) of the barrier problem.
DomainMask barrier_region(const DomainMask& k, const BasePoint& y, double r0);

/// Δh = -C on K^c ∩ B_r0(y), h = u(y) on K, h = outer_values on the rest.
ScalarField build_barrier(const DomainMask& k, const BasePoint& y, double r0, const ScalarField& outer_values,
                          double C, double residual_tol = 1e-8, SolveReport* report = nullptr);

}  // namespace acflab
