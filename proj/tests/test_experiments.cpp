#include <doctest.h>

#include "acflab/experiments.hpp"
#include "acflab/oracles.hpp"

using namespace acflab;
using nlohmann::json;

namespace {

const std::vector<double> kRadii{0.2, 0.14, 0.1, 0.07, 0.05};

UscExperimentConfig usc_config(const Point& y0) {
  UscExperimentConfig c;
  c.y0 = y0;
  c.radii = kRadii;
  c.samples = 12;
  return c;
}

double max_margin_ratio(const ExperimentReport& r, const std::string& family = "shell") {
  double worst = 0;
  for (const auto& m : r.margins)
    if (m.value("family", "") == family && !m["shell_max"].is_null())
      worst = std::max(worst, std::abs(m["shell_max"].get<double>() / m["estimate_y0"].get<double>() - 1));
  return worst;
}

}  // namespace

TEST_CASE("verdict strings and exit codes") {
  CHECK(to_string(Verdict::pass) == "pass");
  CHECK(to_string(Verdict::fail) == "fail");
  CHECK(to_string(Verdict::hypothesis_violated) == "hypothesis violated");
  CHECK(to_string(Verdict::hypothesis_not_met) == "hypothesis not met");
  CHECK(exit_code(Verdict::fail) == 2);
  CHECK(exit_code(Verdict::hypothesis_violated) == 0);
  CHECK(exit_code(Verdict::hypothesis_not_met) == 0);
  const ToleranceEnvelope tau{0.5, 1.0 / 128, 2.0};
  CHECK(tau(0.1) == doctest::Approx(0.5 * (0.1 + 0.078125) * 2.0));
}

TEST_CASE("usc on a linear field") {
  const double a = 1.7;
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto u = sample(g, [=](const Point& x) { return a * (0.6 * x[0] + 0.8 * x[1]); });
  auto cfg = usc_config(make_point({0.1, -0.05}));
  cfg.touch = TouchSpec{DiniModulus::zero(), 0.1, 0.0, 72};
  const auto r = usc_interior_experiment(u, cfg);
  CHECK(r.verdict == Verdict::pass);
  CHECK(max_margin_ratio(r) <= 0.03);
  CHECK(std::abs(r.fits["estimate_y0"].get<double>() / a - 1) < 0.03);
  CHECK(r.samples.size() == 3 * 12);
  for (const auto& s : r.samples) CHECK((Point(Eigen::Map<const Eigen::VectorXd>(s["y"].get<std::vector<double>>().data(), 2)) - cfg.y0).norm() < std::pow(s["eps"].get<double>(), 2));
  const auto j = r.to_json();
  for (const char* key : {"experiment", "config", "samples", "fits", "margins", "verdict"}) CHECK(j.contains(key));
  CHECK_FALSE(j.contains("runtime_seconds"));
  CHECK(j["verdict"] == "pass");
}

TEST_CASE("usc verdicts are invariant under u -> lambda u + c") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 64);
  const auto u = sample(g, [](const Point& x) { return std::exp(0.5 * x[0]) * std::cos(0.5 * x[1]); });
  auto cfg = usc_config(make_point({0.05, 0.1}));
  cfg.radii = {0.28, 0.2, 0.14, 0.1, 0.07};
  const auto base = usc_interior_experiment(u, cfg);
  CHECK(base.verdict == Verdict::pass);
  for (auto [lambda, c] : {std::pair{3.0, 0.0}, std::pair{1.0, 2.0}, std::pair{0.25, -1.0}}) {
    ScalarField v = u;
    v.values() = lambda * u.values().array() + c;
    const auto r = usc_interior_experiment(v, cfg);
    CHECK(r.verdict == base.verdict);
    for (std::size_t k = 0; k < base.margins.size(); ++k)
      CHECK(r.margins[k]["margin"].get<double>() ==
            doctest::Approx(lambda * base.margins[k]["margin"].get<double>()).epsilon(1e-6));
  }
}

TEST_CASE("usc preconditions") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 64);
  auto cfg = usc_config(make_point({0, 0}));
  cfg.radii = {0.28, 0.2, 0.14, 0.1, 0.07};
  SUBCASE("a strongly superharmonic field fails the subsolution check") {
    const auto u = sample(g, [](const Point& x) { return -x.squaredNorm(); });
    const auto r = usc_interior_experiment(u, cfg);
    CHECK(r.verdict == Verdict::fail);
  }
  SUBCASE("touching fails at the corner of a right-angle zero set") {
    // the zero set of max(x1, x2, 0) is a right-angle wedge at the origin: no C^1 cone fits inside it
    const auto w = sample(g, [](const Point& x) { return std::max(std::max(x[0], x[1]), 0.0); });
    cfg.touch = TouchSpec{DiniModulus::hoelder(1.0), 0.1, 0.0, 72};
    cfg.eps = {0.2};
    const auto r = usc_interior_experiment(w, cfg, [](const Point& x) { return std::max(std::max(x[0], x[1]), 0.0); });
    CHECK(r.verdict == Verdict::hypothesis_violated);
    CHECK(r.to_json()["verdict"] == "hypothesis violated");
  }
  SUBCASE("shells outside the grid") {
    const auto u = sample(g, [](const Point& x) { return x[0]; });
    cfg.y0 = make_point({0.9, 0});
    CHECK_THROWS_AS(usc_interior_experiment(u, cfg), ContractViolation);
  }
}

TEST_CASE("directional checks on a linear field") {
  const double a = 1.25;
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto u = sample(g, [=](const Point& x) { return a * x[0]; });
  const auto cfg = usc_config(make_point({0.05, 0.05}));
  const auto across = directional_usc_check(u, make_point({0, 1}), cfg);
  CHECK(across.verdict == Verdict::pass);
  for (double m : across.fits["shell_maxima"].get<std::vector<double>>()) CHECK(std::abs(m) < 1e-9);
  const auto along = directional_usc_check(u, make_point({1, 0}), cfg);
  CHECK(along.verdict == Verdict::pass);
  for (double m : along.fits["shell_maxima"].get<std::vector<double>>()) CHECK(m == doctest::Approx(a).epsilon(1e-9));
  CHECK(std::abs(along.fits["estimate_y0"].get<double>() / a - 1) < 0.03);
}

TEST_CASE("barrier on a half plane") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto u = sample(g, [](const Point& x) { return std::max(x[0], 0.0); });
  BarrierConfig cfg;
  cfg.y0 = make_point({0, 0});
  cfg.r0 = 0.25;
  cfg.reference_gradient = 1.0;
  cfg.reference_rel_tol = 0.03;
  const TouchingCone cone(cfg.y0, make_point({-1, 0}), DiniModulus::zero(), 0.25);
  const auto r = barrier_lipschitz_experiment(u, cone, cfg);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.fits["L"].get<double>() == doctest::Approx(1.0).epsilon(0.03));
  CHECK(r.fits["comparison"]["max_u_minus_h"].get<double>() <= 2 * cfg.residual_tol);

  SUBCASE("wrong cone orientation is a hypothesis violation") {
    const TouchingCone inside(cfg.y0, make_point({1, 0}), DiniModulus::zero(), 0.25);
    CHECK(barrier_lipschitz_experiment(u, inside, cfg).verdict == Verdict::hypothesis_violated);
  }
  SUBCASE("constant field") {
    const auto c = sample(g, [](const Point&) { return 0.4; });
    const auto rc = barrier_lipschitz_experiment(c, cone, cfg);
    CHECK(rc.fits["L"].get<double>() == 0.0);
    CHECK(rc.verdict == Verdict::hypothesis_violated);
  }
}

TEST_CASE("half-plane profile fits") {
  const GridSpec w = GridSpec::cube(2, -1, 1, 1.0 / 32);
  const double a = 0.8;
  const Point e = make_point({std::cos(0.7), std::sin(0.7)});
  const auto v = sample(w, [&](const Point& x) { return a * std::max(x.dot(e), 0.0); });
  const auto fit = fit_half_plane_profile(v);
  CHECK(fit.c1 == doctest::Approx(a).epsilon(1e-6));
  CHECK(fit.residual < 1e-4);  // the axis is refined by pattern search, not solved for
  CHECK(std::acos(std::min(1.0, fit.axis.dot(e))) < 1e-3);
  const auto anti = fit_half_plane_profile(v, Point(-e));
  CHECK(anti.residual > 0.5);
  const auto zero = sample(w, [](const Point&) { return 0.0; });
  const auto z1 = fit_half_plane_profile(zero, e), z2 = fit_half_plane_profile(zero, Point(-e));
  CHECK(z1.c1 == 0.0);
  CHECK(z1.residual == z2.residual);
}

TEST_CASE("asymptotic development") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  BlowupConfig cfg;
  cfg.y0 = make_point({0, 0});
  cfg.estimate_radii = kRadii;
  SUBCASE("a half plane is its own blow-up") {
    const double a = 1.5;
    const auto u = sample(g, [=](const Point& x) { return a * std::max(x[1], 0.0); });
    cfg.reference_axis = make_point({0, 1});
    const auto r = asymptotic_development_experiment(u, cfg);
    CHECK(r.verdict == Verdict::pass);
    for (const auto& s : r.samples) {
      CHECK(s["c1"].get<double>() == doctest::Approx(a).epsilon(1e-6));
      CHECK(s["residual"].get<double>() < 1e-6);
    }
  }
  SUBCASE("a quadratic perturbation decays linearly in r") {
    const auto u = sample(g, [](const Point& x) { return std::max(x[0], 0.0) + x[0] * x[0]; });
    cfg.radii = {0.4, 0.2, 0.1};
    const auto r = asymptotic_development_experiment(u, cfg);
    CHECK(r.verdict == Verdict::pass);
    REQUIRE(r.samples.size() == 3);
    for (std::size_t k = 1; k < 3; ++k) {
      const double ratio = r.samples[k - 1]["residual"].get<double>() / r.samples[k]["residual"].get<double>();
      CHECK(ratio == doctest::Approx(2.0).epsilon(0.25));
    }
    CHECK(r.samples[2]["c1"].get<double>() == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("zero gradient is the other branch of the dichotomy") {
    const auto u = sample(g, [](const Point&) { return 0.3; });
    const auto r = asymptotic_development_experiment(u, cfg);
    CHECK(r.verdict == Verdict::hypothesis_not_met);
    CHECK(r.to_json()["verdict"] == "hypothesis not met");
  }
  CHECK(zero_field_threshold(g, cfg.y0, kRadii) == doctest::Approx(1e-8));
}

TEST_CASE("cone field blow-up at a free boundary point") {
  const auto o = OracleField::alt_caffarelli(ac_profile_build());
  const GridSpec g = GridSpec::cube(3, -1, 1, 1.0 / 32);
  const auto u = oracle_sample(o, g).value;
  const double t0 = o.profile().theta0;
  BlowupConfig cfg;
  cfg.y0 = 0.5 * make_point({std::sin(t0), 0, std::cos(t0)});
  cfg.radii = {0.3, 0.2, 0.1};
  cfg.estimate_radii = {0.4, 0.3, 0.2, 0.1};
  cfg.h_ref = 1.0 / 16;
  cfg.reference_axis = make_point({std::cos(t0), 0, -std::sin(t0)});
  const auto r = asymptotic_development_experiment(u, cfg, [&](const Point& x) { return o.value(x); });
  MESSAGE(r.fits.dump());
  CHECK(r.fits["c1_limit"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.fits["axis_error_deg"].get<double>() < 3.0);
}

TEST_CASE("lattice rotations leave I(r, y, G_y) unchanged") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 64);
  const auto zero = sample(g, [](const Point&) { return 0.0; });
  const BasePoint y = make_base_point(zero, make_point({0, 0}));
  const Point e = make_point({1, 0}), f = make_point({0, 1});
  const auto w = DiniModulus::hoelder(0.5);
  const auto Ge = build_G(cone_mask(TouchingCone(y.y, e, w, 1.0), g), y, e, 1e-12);
  const auto Gf = build_G(cone_mask(TouchingCone(y.y, f, w, 1.0), g), y, f, 1e-12);
  // node values correspond under the rotation
  double worst = 0;
  for (Index i = 0; i < g.size(); ++i) {
    const Point x = g.node(i);
    worst = std::max(worst, std::abs(Ge[i] - Gf[g.nearest(make_point({-x[1], x[0]}))]));
  }
  CHECK(worst < 1e-11);
  for (double r : {0.5, 0.25, 0.1})
    CHECK(weighted_dirichlet(Gf, y, r) == doctest::Approx(weighted_dirichlet(Ge, y, r)).epsilon(1e-11));
}

TEST_CASE("dirichlet protocol") {
  SUBCASE("half plane with data vanishing to second order") {
    const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
    const auto domain = make_mask(g, [](const Point& x) { return x[1] > 0; });
    DirichletExperimentConfig cfg;
    cfg.y0 = make_point({0, 0});
    cfg.radii = kRadii;
    cfg.samples = 8;
    cfg.touch = TouchSpec{DiniModulus::zero(), 0.1, 0.0, 72};
    const auto r = dirichlet_boundary_experiment(domain, [](const Point& x) { return x[0] * x[0] + 0.5 * x[1] * x[1]; }, cfg);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.fits["touch"]["failures"].empty());
    CHECK(r.fits["touch"]["checked"].get<int>() > 0);
  }
  SUBCASE("zig-zag teeth violate the touching hypothesis") {
    const double h = 1.0 / 128;
    // peaks must fall inside the largest shell |y - y0| < eps^2 = 0.04
    const auto z = zigzag_fixture(h, 4 * h);
    DirichletExperimentConfig cfg;
    cfg.y0 = z.valley;
    cfg.radii = {0.16, 0.12, 0.08, 0.06, 0.04};
    cfg.eps = {0.2, 0.1};
    cfg.touch = TouchSpec{DiniModulus::hoelder(1.0, 4.0), 0.05, 0.0, 72};
    const auto r = dirichlet_boundary_experiment(z.domain, z.g, cfg);
    CHECK(r.verdict == Verdict::hypothesis_violated);
    CHECK_FALSE(r.fits["touch"]["failures"].empty());
  }
  SUBCASE("y0 must be a boundary node") {
    const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 32);
    const auto domain = make_mask(g, [](const Point& x) { return x[1] > 0; });
    DirichletExperimentConfig cfg;
    cfg.y0 = make_point({0, 0.5});
    cfg.radii = {0.4, 0.3, 0.2, 0.1};
    CHECK_THROWS_AS(dirichlet_boundary_experiment(domain, [](const Point&) { return 0.0; }, cfg), ContractViolation);
  }
}

TEST_CASE("ring fixture boundary gradient") {
  const auto f = ring_fixture(1.0 / 128);
  DirichletExperimentConfig cfg;
  cfg.y0 = make_point({0.25, 0});
  cfg.radii = kRadii;
  cfg.samples = 8;
  cfg.touch = TouchSpec{DiniModulus::hoelder(1.0, 4.0), 0.1, 0.0, 72};
  const auto r = dirichlet_boundary_experiment(f.domain, f.g, cfg);
  CHECK(r.verdict == Verdict::pass);
  // capacitor potential 1 - log(|x|/rin)/log(rout/rin) ... v = u - g has gradient 1/(rin log 4) at y0
  const double exact = 1.0 / (0.25 * std::log(4.0));
  CHECK(std::abs(r.fits["estimate_y0"].get<double>() / exact - 1) < 0.05);
}

TEST_CASE("subsolution report") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 32);
  CHECK(subsolution_experiment(sample(g, [](const Point& x) { return x.squaredNorm(); }), 0.0, 1e-9).verdict ==
        Verdict::pass);
  const auto bad = subsolution_experiment(sample(g, [](const Point& x) { return -x.squaredNorm(); }), 0.0, 1e-9);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(exit_code(bad.verdict) == 2);
}
