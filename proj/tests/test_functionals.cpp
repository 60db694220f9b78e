#include <doctest.h>

#include "acflab/functionals.hpp"
#include "acflab/geometry.hpp"
#include "acflab/oracles.hpp"
#include "acflab/quadrature.hpp"
#include "acflab/solvers.hpp"
#include "polar_quadrature.hpp"

#include <random>

using namespace acflab;

namespace {

const std::vector<double> kRadii{0.4, 0.28, 0.2, 0.14, 0.1};

ScalarField half_plane(const GridSpec& g, double a, int sign = 1) {
  return sample(g, [=](const Point& x) { return a * std::max(sign * x[0], 0.0); });
}

BasePoint origin(const ScalarField& f) { return make_base_point(f, Point::Zero(f.grid().dim)); }

}  // namespace

TEST_CASE("c0") {
  CHECK(c0_closed_form(2) == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(c0_closed_form(3) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK_THROWS_AS(c0_closed_form(4), ContractViolation);
  CHECK(std::abs(c0_grid_quadrature(2, 1.0 / 128) / (M_PI / 2) - 1) < 0.005);
  CHECK(std::abs(c0_grid_quadrature(3, 1.0 / 64) / M_PI - 1) < 0.01);
}

TEST_CASE("kernel quadrature against closed forms") {
  // int over the unit cube centred at the singular point of 1/|x|
  CHECK(inverse_distance_box_integral({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}) == doctest::Approx(3 * std::log(2 + std::sqrt(3.0)) - M_PI / 2).epsilon(1e-12));
  // the ball integrals: pi r^2 (2D) and 2 pi r^2 (3D)
  for (int n : {2, 3}) {
    const GridSpec g = GridSpec::cube(n, -1, 1, 1.0 / 32);
    for (double r : {0.1, 0.37, 0.8}) {
      const double exact = n == 2 ? M_PI * r * r : 2 * M_PI * r * r;
      CHECK(ball_kernel_quadrature(g, make_point(n == 2 ? std::initializer_list<double>{0.01, 0.02}
                                                        : std::initializer_list<double>{0.01, 0.02, -0.03}),
                                   r) == doctest::Approx(exact).epsilon(2e-3));
    }
  }
  // a cell well inside the ball gets its whole kernel integral
  CHECK(cube_ball_kernel_integral(3, make_point({0, 0, 0}), 0.1, 1.0) ==
        doctest::Approx(0.01 * inverse_distance_box_integral({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5})).epsilon(1e-12));
  CHECK(cube_ball_kernel_integral(2, make_point({5, 5}), 0.1, 1.0) == 0.0);
}

TEST_CASE("weighted dirichlet examples") {
  for (double a : {0.5, 2.0}) {
    const GridSpec g2 = GridSpec::cube(2, -1, 1, 1.0 / 128);
    const auto v2 = half_plane(g2, a);
    for (double r : kRadii) CHECK(std::abs(weighted_dirichlet(v2, origin(v2), r) / (a * a * M_PI / 2) - 1) < 0.03);
    const GridSpec g3 = GridSpec::cube(3, -0.5, 0.5, 1.0 / 32);
    const auto v3 = half_plane(g3, a);
    for (double r : {0.4, 0.2, 0.1}) CHECK(std::abs(weighted_dirichlet(v3, origin(v3), r) / (a * a * M_PI) - 1) < 0.05);
  }
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 64);
  const ScalarField zero = sample(g, [](const Point&) { return 0.0; });
  CHECK(weighted_dirichlet(zero, origin(zero), 0.5) == 0.0);
  CHECK_THROWS_AS(weighted_dirichlet(zero, origin(zero), 1.5), ContractViolation);
  CHECK_THROWS_AS(weighted_dirichlet(zero, origin(zero), 2 * g.spacing), ContractViolation);
}

TEST_CASE("weighted dirichlet matches the polar reference on a smooth field") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto v = sample(g, [](const Point& x) { return std::sin(2 * x[0]) * std::exp(x[1]); });
  const double r = 0.5;
  const double ref = polar::energy_2d(
      [](double rho, double phi) {
        const double x = rho * std::cos(phi), y = rho * std::sin(phi);
        const double gx = 2 * std::cos(2 * x) * std::exp(y), gy = std::sin(2 * x) * std::exp(y);
        return gx * gx + gy * gy;
      },
      r, 400, 800);
  CHECK(weighted_dirichlet(v, origin(v), r) == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("scaling covariance") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  const GridSpec g = GridSpec::cube(3, -0.5, 0.5, 1.0 / 16);
  ScalarField v(g);
  for (Index i = 0; i < g.size(); ++i) v[i] = U(rng);
  const BasePoint y = make_base_point(v, make_point({0.03, -0.02, 0.01}));
  for (double lambda : {3.0, -0.7, 1e3}) {
    ScalarField w = v;
    w.values() *= lambda;
    const BasePoint yw = make_base_point(w, y.y);
    CHECK(weighted_dirichlet(w, yw, 0.3) == doctest::Approx(lambda * lambda * weighted_dirichlet(v, y, 0.3)).epsilon(1e-12));
  }
  const GridSpec g2 = GridSpec::cube(2, -1, 1, 1.0 / 64);
  const auto hp = half_plane(g2, 1.0), hm = half_plane(g2, 1.0, -1);
  ScalarField hp2 = hp, hm2 = hm;
  hp2.values() *= 3.0;
  hm2.values() *= 0.25;
  CHECK(acf_product(hp2, hm2, origin(hp), 0.5) == doctest::Approx(9 * 0.0625 * acf_product(hp, hm, origin(hp), 0.5)).epsilon(1e-12));
}

TEST_CASE("acf product examples") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const double a = 1.5, b = 0.5;
  const auto hp = half_plane(g, a), hm = half_plane(g, b, -1);
  const double closed = std::pow(M_PI / 2, 2) * a * a * b * b;
  for (double r : kRadii) CHECK(std::abs(acf_product(hp, hm, origin(hp), r) / closed - 1) < 0.05);
  const auto zero = sample(g, [](const Point&) { return 0.0; });
  CHECK(acf_product(hp, zero, origin(hp), 0.3) == 0.0);
  try {
    acf_product(hp, hp, origin(hp), 0.3);
    FAIL("expected an admissibility error");
  } catch (const AdmissibilityError& e) {
    CHECK(e.worst_node >= 0);
    CHECK(hp[e.worst_node] > 0);
  }
}

TEST_CASE("monotonicity sweep") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  SUBCASE("half-plane pair is flat") {
    const auto hp = half_plane(g, 1.0), hm = half_plane(g, 2.0, -1);
    const auto m = monotonicity_sweep(Partner::plain(hp), Partner::plain(hm), origin(hp), kRadii);
    CHECK(m.pass);
    const auto [lo, hi] = std::minmax_element(m.sweep.product.begin(), m.sweep.product.end());
    CHECK(*hi / *lo - 1 < 0.05);
  }
  SUBCASE("zero partner") {
    const auto hp = half_plane(g, 1.0);
    const auto zero = sample(g, [](const Point&) { return 0.0; });
    const auto m = monotonicity_sweep(Partner::plain(hp), Partner::plain(zero), origin(hp), kRadii);
    CHECK(m.pass);
    for (double p : m.sweep.product) CHECK(p == 0.0);
  }
  SUBCASE("cones of opening 3pi/2 and pi/2 grow like r^{4/3}") {
    const auto big = oracle_sample(OracleField::homogeneous_cone_2d(1.5 * M_PI, 0.0), g).value;
    const auto small = oracle_sample(OracleField::homogeneous_cone_2d(0.5 * M_PI, 1.5 * M_PI), g).value;
    const std::vector<double> radii{0.8, 0.4, 0.2, 0.1};
    const auto m = monotonicity_sweep(Partner::plain(big), Partner::plain(small), origin(big), radii);
    CHECK(m.pass);
    for (std::size_t k = 1; k < radii.size(); ++k) CHECK(m.sweep.product[k] < m.sweep.product[k - 1]);
    // reference products from the closed-form gradients, |grad|^2 = a^2 rho^{2a-2} on each sector
    auto sector = [](double a, double start) {
      return [=](double rho, double phi) {
        const double rel = std::remainder(phi - start - 0.5 * M_PI / a, 2 * M_PI);
        return std::abs(rel) < 0.5 * M_PI / a ? a * a * std::pow(rho, 2 * a - 2) : 0.0;
      };
    };
    auto product = [&](double r) {
      return polar::energy_2d(sector(2.0 / 3, 0.0), r) * polar::energy_2d(sector(2.0, 1.5 * M_PI), r);
    };
    CHECK(product(0.4) / product(0.2) == doctest::Approx(std::pow(2.0, 4.0 / 3)).epsilon(1e-3));
    for (std::size_t k = 1; k < radii.size(); ++k) {
      const double ratio = m.sweep.product[k - 1] / m.sweep.product[k];
      CHECK(std::abs(ratio / (product(radii[k - 1]) / product(radii[k])) - 1) < 0.05);
    }
  }
}

TEST_CASE("almost monotonicity") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  SUBCASE("monotone pair needs no correction") {
    const auto hp = half_plane(g, 1.0), hm = half_plane(g, 1.0, -1);
    const auto f = almost_monotonicity_fit(Partner::plain(hp), Partner::plain(hm), origin(hp), kRadii);
    CHECK(f.pass);
    CHECK(f.C <= 0.05 * f.sweep.product.front());
  }
  SUBCASE("a pair with laplacian -1 has a finite correction") {
    const auto hp = sample(g, [](const Point& x) { return std::max(x[0] - x.squaredNorm() / 4, 0.0); });
    const auto hm = sample(g, [](const Point& x) { return std::max(-x[0] - x.squaredNorm() / 4, 0.0); });
    const auto f = almost_monotonicity_fit(Partner::plain(hp), Partner::plain(hm), origin(hp), kRadii);
    CHECK(f.pass);
    CHECK(std::isfinite(f.C));
    const auto& s = f.sweep;
    for (std::size_t i = 0; i < s.radii.size(); ++i)
      for (std::size_t j = i; j < s.radii.size(); ++j)
        CHECK(s.product[j] <= (1 + s.radii[i]) * s.product[i] + f.C * s.radii[i] * (1 + 1e-12));
  }
  SUBCASE("zero product") {
    const auto hp = half_plane(g, 1.0);
    const auto zero = sample(g, [](const Point&) { return 0.0; });
    CHECK(almost_monotonicity_fit(Partner::plain(hp), Partner::plain(zero), origin(hp), kRadii).C == 0.0);
  }
}

TEST_CASE("extrapolate_limit") {
  const std::vector<double> r{0.4, 0.2, 0.1, 0.05};
  const auto c = extrapolate_limit(r, {1.25, 1.25, 1.25, 1.25});
  CHECK(c.limit == 1.25);
  CHECK(c.slope == 0.0);
  const auto lin = extrapolate_limit(r, {2 + 3 * 0.4, 2 + 3 * 0.2, 2 + 3 * 0.1, 2 + 3 * 0.05});
  CHECK(std::abs(lin.limit - 2) < 1e-12);
  CHECK_FALSE(lin.decreasing_in_r);
  CHECK_FALSE(lin.low_confidence);
  const auto dec = extrapolate_limit(r, {2 - 3 * 0.4, 2 - 3 * 0.2, 2 - 3 * 0.1, 2 - 3 * 0.05});
  CHECK(std::abs(dec.limit - 2) < 1e-12);
  CHECK(dec.residual < 1e-12);
  CHECK(dec.decreasing_in_r);
  const auto neg = extrapolate_limit(r, {0.4, 0.2, 0.1, 0.05});
  CHECK(neg.limit == 0.0);
  CHECK(std::abs(neg.raw_limit) < 1e-12);
  const auto noisy = extrapolate_limit(r, {1, 3, 1, 3});
  CHECK(noisy.low_confidence);
  CHECK_THROWS_AS(extrapolate_limit({0.4, 0.2, 0.1}, {1, 1, 1}), ContractViolation);
  CHECK_THROWS_AS(extrapolate_limit({0.4, 0.3, 0.2, 0.15}, {1, 1, 1, 1}), ContractViolation);
  const auto sq = extrapolate_limit(r, {1 + 0.16, 1 + 0.04, 1 + 0.01, 1 + 0.0025}, 2.0);
  CHECK(std::abs(sq.limit - 1) < 1e-12);
}

TEST_CASE("extrapolate_limit on monotone data stays below the maximum") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  const std::vector<double> r{0.4, 0.28, 0.2, 0.14, 0.1};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(r.size());
    double acc = U(rng);
    for (std::size_t k = r.size(); k-- > 0;) v[k] = acc += U(rng);  // nondecreasing in r
    const auto fit = extrapolate_limit(r, v);
    REQUIRE(fit.limit <= *std::max_element(v.begin(), v.end()) + 1e-12);
    REQUIRE(fit.limit >= 0.0);
  }
}

TEST_CASE("gradient estimate") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  SUBCASE("linear fields, exact linear scaling") {
    const auto base = sample(g, [](const Point& x) { return x[0]; });
    const double e1 = gradient_estimate(base, origin(base), kRadii).value;
    CHECK(std::abs(e1 - 1) < 0.03);
    for (double a : {0.5, 2.0}) {
      ScalarField u = base;
      u.values() *= a;
      CHECK(gradient_estimate(u, origin(u), kRadii).value / e1 == doctest::Approx(a).epsilon(1e-10));
    }
  }
  SUBCASE("constant field") {
    const auto u = sample(g, [](const Point&) { return 0.7; });
    CHECK(gradient_estimate(u, origin(u), kRadii).value == 0.0);
  }
  SUBCASE("adding a constant changes nothing") {
    const auto u = sample(g, [](const Point& x) { return std::sin(x[0] + 2 * x[1]); });
    ScalarField v = u;
    v.values().array() += 0.5;  // exactly representable shifts keep the differences
    const Point y = make_point({0.05, -0.1});
    const auto a = gradient_estimate(u, make_base_point(u, y), kRadii);
    const auto b = gradient_estimate(v, make_base_point(v, y), kRadii);
    CHECK(b.value == doctest::Approx(a.value).epsilon(1e-12));
  }
  SUBCASE("rotations of a linear field") {
    const double ref = gradient_estimate(sample(g, [](const Point& x) { return x[0]; }),
                                         origin(sample(g, [](const Point& x) { return x[0]; })), kRadii).value;
    for (double angle : {0.3, M_PI / 4, 1.1, 2.5}) {
      const auto u = sample(g, [=](const Point& x) { return std::cos(angle) * x[0] + std::sin(angle) * x[1]; });
      CHECK(std::abs(gradient_estimate(u, origin(u), kRadii).value / ref - 1) < 0.05);
    }
  }
  SUBCASE("three dimensions") {
    const GridSpec g3 = GridSpec::cube(3, -0.5, 0.5, 1.0 / 32);
    const auto u = sample(g3, [](const Point& x) { return 2 * x[2]; });
    CHECK(std::abs(gradient_estimate(u, origin(u), {0.4, 0.3, 0.2, 0.1}).value / 2 - 1) < 0.05);
  }
}

TEST_CASE("quotient identity") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto u = sample(g, [](const Point& x) { return 1.3 * x[0] + 0.2 * x[0] * x[1]; });
  const auto zero = sample(g, [](const Point&) { return 0.0; });
  const BasePoint y = origin(u);
  const Point axis = make_point({-1, 0});
  const auto Ga = build_G(cone_mask(TouchingCone(y.y, axis, DiniModulus::zero(), 1.0), g), y, axis, 1e-11);
  const auto Gh = build_G(cone_mask(TouchingCone(y.y, axis, DiniModulus::hoelder(0.5), 1.0), g), y, axis, 1e-11);
  SUBCASE("scaled partner cancels exactly") {
    ScalarField G2 = Ga;
    G2.values() *= 2.0;
    const auto q = quotient_identity_check(u, y, Ga, G2, kRadii);
    CHECK(q.pass);
    CHECK(q.relative_difference < 1e-12);
  }
  SUBCASE("half-space and hoelder cone partners agree") {
    const auto q = quotient_identity_check(u, y, Ga, Gh, kRadii);
    MESSAGE("quotients " << q.quotient_a << " " << q.quotient_b);
    CHECK(q.pass);
    CHECK(q.relative_difference < 0.05);
    CHECK(std::sqrt(q.quotient_a / c0_closed_form(2)) == doctest::Approx(1.3).epsilon(0.03));
  }
  SUBCASE("flat u") {
    const auto q = quotient_identity_check(zero, origin(zero), Ga, Gh, kRadii);
    CHECK(q.quotient_a == 0.0);
    CHECK(q.quotient_b == 0.0);
  }
}

TEST_CASE("ball samples") {
  const Point c = make_point({0.1, 0.2, 0.3});
  const auto s = ball_samples(c, 0.05, 20, 9);
  REQUIRE(s.size() == 20);
  for (const auto& p : s) CHECK((p - c).norm() < 0.05);
  CHECK((s[0] - c).norm() == doctest::Approx(0.999 * 0.05));
  const auto t = ball_samples(c, 0.05, 20, 9);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s[k] == t[k]);
}

TEST_CASE("stability") {
  const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 128);
  const auto u = sample(g, [](const Point& x) { return 0.8 * x[0] - 0.6 * x[1]; });
  const BasePoint y0 = make_base_point(u, make_point({0.05, 0.02}));
  CHECK(stability_deviation(u, y0, y0.y, 0.1) == 0.0);
  const auto sweep = stability_sweep(u, y0, {0.2, 0.1, 0.05}, 16);
  REQUIRE(sweep.per_eps.size() == 3);
  for (const auto& r : sweep.per_eps) {
    CHECK(r.sup_deviation <= sweep.fitted_C1 * r.eps * (1 + 1e-12));
    for (const auto& p : r.samples) CHECK((p - y0.y).norm() < r.eps * r.eps);
  }
  for (std::size_t k = 1; k < 3; ++k) {
    const double ratio = sweep.per_eps[k].sup_deviation / sweep.per_eps[k - 1].sup_deviation;
    CHECK(ratio >= 0.25);
    CHECK(ratio <= 0.75);
  }
  MESSAGE("stability " << sweep.per_eps[0].sup_deviation << " " << sweep.per_eps[1].sup_deviation << " "
                       << sweep.per_eps[2].sup_deviation);
}
