#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tpflow/jet.hpp"
#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"
#include "tpflow/verify.hpp"

using namespace tpflow;

namespace {
constexpr double kPi = std::numbers::pi;

GridPtr spec_grid(int nt = 8, int n = 16) { return PeriodicGrid::make(1.0, nt, n, n, n, 2 * kPi, Backend::spectral); }

GridPtr ext_grid(int nt = 4, int n = 16) {
  return PeriodicGrid::make(1.0, nt, n, n, n, 4.0, Backend::exterior, ObstacleGeometry{0.48, 1.2});
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
}  // namespace

TEST_CASE("jet arithmetic reproduces polynomial derivatives") {
  const Vec3 x0{0.3, -0.7, 1.1};
  const auto x = Jet3::variable(0, x0[0]), y = Jet3::variable(1, x0[1]), z = Jet3::variable(2, x0[2]);
  // f = x^2 y z + 3 y^3 - z
  const Jet3 f = x * x * y * z + 3.0 * (y * y * y) - z;
  CHECK(f.value() == doctest::Approx(x0[0] * x0[0] * x0[1] * x0[2] + 3 * std::pow(x0[1], 3) - x0[2]));
  CHECK(f.derivative(1, 0, 0) == doctest::Approx(2 * x0[0] * x0[1] * x0[2]));
  CHECK(f.derivative(0, 3, 0) == doctest::Approx(18.0));
  CHECK(f.derivative(1, 1, 1) == doctest::Approx(2 * x0[0]));
  CHECK(f.derivative(2, 0, 1) == doctest::Approx(2 * x0[1]));

  const Jet3 s = (x * y).compose(std::sin(x0[0] * x0[1]), std::cos(x0[0] * x0[1]), -std::sin(x0[0] * x0[1]),
                                 -std::cos(x0[0] * x0[1]));
  const double a = x0[0] * x0[1];
  CHECK(s.derivative(0, 1, 0) == doctest::Approx(x0[0] * std::cos(a)));
  // d^3/dx^2 dy sin(xy) = -2 y sin(xy) - x y^2 cos(xy)
  CHECK(s.derivative(2, 1, 0) == doctest::Approx(-2 * x0[1] * std::sin(a) - x0[0] * x0[1] * x0[1] * std::cos(a)));
}

TEST_CASE("manufactured fields are solenoidal, deterministic and consistent") {
  auto g = spec_grid(8, 16);
  auto params = OseenParams::towed(0.7, 0.5, 0.3, g->nt(), 1.0);
  const auto a = manufactured_case(CaseKind::wholespace_linear, g, params, 7, 1.0);
  const auto b = manufactured_case(CaseKind::wholespace_linear, g, params, 7, 1.0);
  const auto c = manufactured_case(CaseKind::wholespace_linear, g, params, 8, 1.0);
  CHECK(max_divergence(a.u) < 1e-11 * std::max(1.0, a.u.max_abs()));
  CHECK((a.u - b.u).max_abs() == 0.0);
  CHECK((a.F - b.F).max_abs() == 0.0);
  CHECK((a.u - c.u).max_abs() > 1e-3);
  // forcing matches the discrete operator on a band-limited field
  const Field Fh = forward_apply(a.u, a.p, params.nu, params.lambda);
  CHECK((Fh - a.F).max_abs() < 1e-9 * a.F.max_abs());

  const auto z = manufactured_case(CaseKind::wholespace_linear, g, params, 7, 0.0);
  CHECK(z.u.max_abs() == 0.0);
  CHECK(z.F.max_abs() == 0.0);

  CHECK_THROWS_AS(manufactured_case(CaseKind::exterior_linear, g, params, 1, 1.0), std::invalid_argument);
  ManufacturedOptions wide;
  wide.band = 8;
  CHECK_THROWS_AS(manufactured_case(CaseKind::wholespace_linear, g, params, 1, 1.0, wide), std::invalid_argument);
  CHECK(case_kind_from_string(to_string(CaseKind::exterior_linear)) == CaseKind::exterior_linear);
  CHECK_THROWS(case_kind_from_string("bogus"));
}

TEST_CASE("whole-space manufactured solution is recovered to round-off") {
  auto g = spec_grid(8, 16);
  auto params = OseenParams::constant(1.0, 0.5, g->nt(), 1.0);
  const auto mc = manufactured_case(CaseKind::wholespace_linear, g, params, 3, 1.0);
  const auto r = run_mms(mc);
  CHECK(r.velocity_error < 1e-10);
  CHECK(r.pressure_error < 1e-10);
}

TEST_CASE("exterior manufactured case honours the obstacle") {
  auto g = ext_grid(4, 16);
  auto params = OseenParams::constant(1.0, 0.5, g->nt(), 1.0);
  ManufacturedOptions opt;
  opt.band = 1;
  opt.r_in = 0.8;
  opt.r_out = 1.92;
  const auto mc = manufactured_case(CaseKind::exterior_linear, g, params, 5, 1.0, opt);
  REQUIRE(mc.bc.has_value());
  const auto* ob = g->obstacle();
  for (std::size_t i = 0; i < g->spatial_size(); ++i)
    if (ob->solid(i)) CHECK(mc.u(0, 0, i) == 0.0);
  // the cut-off vanishes near the body, so the Dirichlet data is zero there
  double bmax = 0.0;
  for (double v : mc.bc->values()) bmax = std::max(bmax, std::abs(v));
  CHECK(bmax == 0.0);
  const auto r = run_mms(mc);
  CHECK(r.velocity_error < 0.15);
}

TEST_CASE("random fields are real, band-limited and reproducible") {
  auto g = spec_grid(8, 16);
  const Field a = random_band_limited(g, 3, 11, 1, 2);
  const Field b = random_band_limited(g, 3, 11, 1, 2);
  CHECK((a - b).max_abs() == 0.0);
  CHECK(a.max_abs() > 0.0);
  CHECK((dealias(a) - a).max_abs() < 1e-12 * a.max_abs());
  const Field s = random_solenoidal(g, 4, 1, 2);
  CHECK(max_divergence(s) < 1e-11 * s.max_abs());
  CHECK(default_band(16) == 4);
  CHECK(default_band(2) == 1);
}

TEST_CASE("audit reports are scale invariant and serialize") {
  auto g = spec_grid(8, 12);
  auto params = OseenParams::constant(1.0, 0.5, g->nt(), 1.0);
  const auto r = audit_linear_estimate(g, params, 4, 1.5, 21);
  CHECK(r.rows.size() == 4);
  CHECK(r.pass);
  CHECK(r.dispersion >= 1.0);
  CHECK(r.violations == 0);
  const auto csv = r.to_csv();
  CHECK(csv.rfind("label,left,right,fitted_constant,pass\n", 0) == 0);
  CHECK(csv.find("dispersion,") != std::string::npos);
  CHECK(r.get("q") == 1.5);
  CHECK_THROWS_AS(r.get("nope"), std::out_of_range);
  CHECK_THROWS_AS(audit_linear_estimate(g, params, 0, 1.5, 1), std::invalid_argument);
}

TEST_CASE("modewise constants stay bounded in k") {
  auto g = spec_grid(16, 12);
  auto params = OseenParams::constant(1.0, 0.5, g->nt(), 1.0);
  const auto r = audit_modewise(g, params, 6, 2);
  CHECK(r.rows.size() == 6);
  CHECK(r.pass);
  CHECK_THROWS_AS(audit_modewise(g, params, 8, 2), std::invalid_argument);
}

TEST_CASE("embedding targets follow the admissible exponents") {
  const auto t = embedding_targets(0.5, 0.5, 2.0);
  const auto e = admissible_exponents(0.5, 0.5, 2.0);
  CHECK(t.r0 == doctest::Approx(e.r0.open ? 0.9 * e.r0.value : e.r0.value));
  CHECK(t.p0 == doctest::Approx(12.0));
  CHECK(t.r1 == doctest::Approx(e.r1.open ? 0.9 * e.r1.value : e.r1.value));
  CHECK(t.p1 == doctest::Approx(3.0));
  const auto s = embedding_targets(0.0, 1.0, 2.0);
  CHECK(s.r1 == doctest::Approx(12.0));
  CHECK(s.p0 == kInfinity);

  auto g = spec_grid(8, 12);
  const auto r = audit_embedding(g, 2.0, 0.5, 0.5, 5, 4, 6);
  CHECK(r.rows.size() == 10);
  CHECK(r.violations <= 1);
}

TEST_CASE("nonlinear term estimate is invariant under scaling") {
  auto g = spec_grid(4, 12);
  const std::vector<double> lambdas{0.25, 0.5, 1.0};
  const auto r = audit_nonlinear_term_ensemble(g, 1.25, lambdas, 3, 9);
  CHECK(r.get("scale_invariance_error") < 1e-12);
  CHECK(r.get("lambda_exponent") == doctest::Approx(0.6));
  CHECK(r.rows.size() == 18);
  CHECK_THROWS_AS(nonlinear_term_sides(Field(g, 3), 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("Oseen fundamental solution: divergence-free, momentum balance and limits") {
  const double nu = 0.8, lambda = 1.3, h = 1e-4;
  const Vec3 x{0.4, -0.9, 0.6};
  auto at = [&](Vec3 y) { return oseen_tensor_e1(nu, lambda, y); };
  auto shift = [](Vec3 y, int a, double d) {
    y[static_cast<std::size_t>(a)] += d;
    return y;
  };
  double div = 0.0;
  for (int a = 0; a < 3; ++a)
    div += (at(shift(x, a, h))[static_cast<std::size_t>(a)] - at(shift(x, a, -h))[static_cast<std::size_t>(a)]) / (2 * h);
  CHECK(std::abs(div) < 1e-6);

  // -nu Lap E + lambda d1 E + grad P = 0 away from the origin, with P = x1 / (4 pi r^3)
  auto P = [](const Vec3& y) { return y[0] / (4 * kPi * std::pow(norm3(y), 3)); };
  const double hh = 1e-3;
  for (int i = 0; i < 3; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double lap = 0.0;
    for (int a = 0; a < 3; ++a)
      lap += (at(shift(x, a, hh))[iu] - 2 * at(x)[iu] + at(shift(x, a, -hh))[iu]) / (hh * hh);
    const double d1 = (at(shift(x, 0, hh))[iu] - at(shift(x, 0, -hh))[iu]) / (2 * hh);
    const double gp = (P(shift(x, i, hh)) - P(shift(x, i, -hh))) / (2 * hh);
    CHECK(std::abs(-nu * lap + lambda * d1 + gp) < 1e-4);
  }

  // Stokes limit (1/(8 pi nu)) (1/r + x1^2 / r^3) for small lambda
  const auto st = oseen_tensor_e1(nu, 1e-7, x);
  const double r = norm3(x);
  CHECK(st[0] == doctest::Approx((1 / r + x[0] * x[0] / std::pow(r, 3)) / (8 * kPi * nu)).epsilon(1e-5));
  CHECK(st[1] == doctest::Approx(x[0] * x[1] / std::pow(r, 3) / (8 * kPi * nu)).epsilon(1e-5));

  // axis values in closed form
  const double k = lambda / (2 * nu), rr = 1.7, s = 2 * k * rr;
  CHECK(oseen_tensor_e1(nu, lambda, {rr, 0, 0})[0] == doctest::Approx(1 / (4 * kPi * nu * rr)));
  const double ep = (s * std::exp(-s) - 1 + std::exp(-s)) / (s * s);
  CHECK(oseen_tensor_e1(nu, lambda, {-rr, 0, 0})[0] ==
        doctest::Approx(std::exp(-s) / (4 * kPi * nu * rr) - k / (2 * kPi * nu) * ep));
  CHECK(oseen_axis_ratio(1.0, 1.0, 4.0 / 3.0) == doctest::Approx(1.81).epsilon(0.01));
  CHECK(oseen_axis_ratio(0.25, 1.0, 4.0 / 3.0) > oseen_axis_ratio(1.0, 1.0, 4.0 / 3.0));
  CHECK_THROWS_AS(oseen_tensor_e1(nu, lambda, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("wake diagnostic is symmetric without drift and skewed with it") {
  auto g = ext_grid(2, 16);
  const auto w0 = run_wake(g, 1.0, 0.0, 4.0 / 3.0);
  CHECK(w0.ratio == doctest::Approx(1.0).epsilon(0.05));
  CHECK(w0.lateral > 0.0);
  const auto w1 = run_wake(g, 0.5, 1.0, 4.0 / 3.0);
  CHECK(w1.ratio > 1.05);
  CHECK_THROWS_AS(run_wake(g, 1.0, 1.0, 1.9), std::invalid_argument);
}
