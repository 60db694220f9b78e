#pragma once

// End-to-end runs: upper semi-continuity of |grad u| on shells around a base
// point, the directional variant, the barrier/Lipschitz comparison, blow-up
// fits and the boundary (Dirichlet) protocol. Each run returns an
// ExperimentReport that serialises to JSON.

#include "acflab/functionals.hpp"
#include "acflab/geometry.hpp"
#include "acflab/solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace acflab {

enum class Verdict { pass, fail, hypothesis_violated, hypothesis_not_met };

std::string to_string(Verdict v);

/// Exit status policy: failures of a claimed inequality are 2, everything else 0.
inline int exit_code(Verdict v) { return v == Verdict::fail ? 2 : 0; }

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json samples = nlohmann::json::array();
  nlohmann::json fits = nlohmann::json::object();
  nlohmann::json margins = nlohmann::json::array();
  Verdict verdict = Verdict::pass;
  std::string detail;
  double runtime_seconds = 0.0;  // not serialised: reports must be reproducible byte for byte
  std::vector<CsvTable> tables;

  nlohmann::json to_json() const;
};

/// Exact values of u where a closed form is known. Multilinear interpolation
/// is used for base-point levels otherwise.
using LevelFunction = std::function<double(const Point&)>;

BasePoint base_point(const ScalarField& u, const Point& y, const LevelFunction& exact);

/// tau(eps) = K (eps + h/eps) S with S the Lipschitz scale of the run.
struct ToleranceEnvelope {
  double K = 0.5;
  double h = 0.0;
  double scale = 1.0;
  double operator()(double eps) const { return K * (eps + h / eps) * scale; }
};

inline constexpr double kDefaultEnvelopeK = 0.5;

/// max(estimate, mean |grad u| over valid nodes of B_radius(y0)).
double lipschitz_scale(const ScalarField& u, const Point& y0, double radius, double estimate);

struct TouchSpec {
  DiniModulus modulus;
  double reach = 0.1;
  double tol = 0.0;  // interface layer; 0 means one cell
  int directions = 72;
};

struct UscExperimentConfig {
  Point y0;
  std::vector<double> eps{0.2, 0.1, 0.05};
  int samples = 32;
  std::vector<double> radii;
  double delta = 1.0;
  double K = kDefaultEnvelopeK;
  std::uint64_t seed = 1;
  double subsolution_lower = -1.0;
  double subsolution_tol = 1e-6;
  // Nodes within this many cells of y0 are left out of the subsolution check:
  // sampling a conical singularity leaves an O(h^2 / rho^3) truncation error.
  double subsolution_exclude_cells = 0.0;
  double maxima_noise = 0.02;  // M(eps) may grow by this fraction between schedule steps
  std::optional<TouchSpec> touch;
  bool hopf = false;  // also build G at y0 and report its gradient (needs touch)
};

nlohmann::json to_json(const UscExperimentConfig& c);

ExperimentReport usc_interior_experiment(const ScalarField& u, const UscExperimentConfig& cfg,
                                         const LevelFunction& exact = {});

/// One-sided difference quotients (u(y + t d) - u(y))/t with t = 2h on the
/// same shells, compared against the estimate at y0.
ExperimentReport directional_usc_check(const ScalarField& u, const Point& direction, const UscExperimentConfig& cfg,
                                       const LevelFunction& exact = {});

struct BarrierConfig {
  Point y0;
  double r0 = 0.05;
  double C = 0.0;
  double residual_tol = 1e-8;
  double touch_tol = 0.0;  // 0 means one cell
  double exclude = 2.0;    // skip |x - y0| < exclude * h in the Lipschitz fit
  std::optional<double> reference_gradient;
  double reference_rel_tol = 0.10;
};

ExperimentReport barrier_lipschitz_experiment(const ScalarField& u, const TouchingCone& cone, const BarrierConfig& cfg,
                                              const LevelFunction& exact = {});

struct BlowupConfig {
  Point y0;
  std::vector<double> radii{0.2, 0.1, 0.05};
  std::vector<double> estimate_radii;
  double half_width = 1.0;
  double h_ref = 1.0 / 32;
  double c1_rel_tol = 0.10;
  double residual_slack = 1e-3;  // residual may not grow by more than this between radii
  std::optional<Point> reference_axis;
  double axis_tol_deg = 3.0;
};

struct AxisFit {
  Point axis;
  double c1 = 0.0;
  double residual = 0.0;  // relative L2 on the unit ball of the window
};

/// Least-squares fit of c1 <x, e>^+ to v over |x| <= 1 for a fixed e.
AxisFit fit_half_plane_profile(const ScalarField& v, const Point& e);

/// Coarse direction search refined locally.
AxisFit fit_half_plane_profile(const ScalarField& v);

/// 10 x the gradient_estimate of the zero field on the same radii (plus a 1e-8 absolute floor).
double zero_field_threshold(const GridSpec& g, const Point& y0, const std::vector<double>& radii);

ExperimentReport asymptotic_development_experiment(const ScalarField& u, const BlowupConfig& cfg,
                                                   const LevelFunction& exact = {});

struct DirichletExperimentConfig {
  Point y0;  // a boundary node of the domain
  std::vector<double> eps{0.2, 0.1};
  int samples = 32;
  std::vector<double> radii;
  double K = kDefaultEnvelopeK;
  std::uint64_t seed = 1;
  TouchSpec touch;
  bool force = false;  // continue past a failed touching check
  double residual_tol = 1e-8;
};

/// Solves Δu = 0 in `domain` with u = g off the domain, forms v = u - g in the
/// domain and 0 outside, then compares estimates at boundary nodes and at
/// interior points of the shells with the estimate at y0.
ExperimentReport dirichlet_boundary_experiment(const DomainMask& domain, const std::function<double(const Point&)>& g,
                                               const DirichletExperimentConfig& cfg);

/// check_subsolution wrapped as a report (fail when the bound is violated).
ExperimentReport subsolution_experiment(const ScalarField& u, double lower_bound, double tol);

// Fixtures ------------------------------------------------------------------

/// Discrete capacitor potential of the ring r_in < |x| < r_out on the cube
/// [-extent, extent]^dim: 1 on |x| <= r_in, 0 on |x| >= r_out.
Solution capacitor_fixture(int dim, double h, double r_in = 0.25, double r_out = 1.0, double extent = 1.0);

struct ZigzagFixture {
  GridSpec grid;
  DomainMask domain;  // above the sawtooth
  std::function<double(const Point&)> g;
  Point valley;
  std::vector<Point> peaks;
};

/// Sawtooth of slope 1 with `teeth` teeth on each side of a valley at
/// (0, valley_height), tooth half-width `half_width`, on [-0.5, 0.5]^2.
ZigzagFixture zigzag_fixture(double h, double half_width, double valley_height = -0.25, int teeth = 8);

struct RingFixture {
  GridSpec grid;
  DomainMask domain;
  std::function<double(const Point&)> g;  // 0 on |x| = r_in, 1 on |x| = r_out, zero gradient on |x| = r_in
  double r_in = 0.25, r_out = 1.0;
};

RingFixture ring_fixture(double h, double r_in = 0.25, double r_out = 1.0);

}  // namespace acflab
