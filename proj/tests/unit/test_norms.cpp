#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"
#include "trig_poly.hpp"

using namespace tpflow;
using testutil::TrigPoly;

namespace {
constexpr double kPi = std::numbers::pi;

// Independent quadrature oracle: explicit loops over t and cells.
double brute_lq(const Field& f, double q) {
  const auto& g = f.grid();
  double s = 0.0;
  for (int t = 0; t < g.nt(); ++t)
    for (std::size_t c = 0; c < g.spatial_size(); ++c) {
      if (!g.fluid(c)) continue;
      double m = 0.0;
      for (int k = 0; k < f.ncomp(); ++k) m += f(t, k, c) * f(t, k, c);
      s += std::pow(std::sqrt(m), q) * g.cell_volume() * g.dt() / g.period();
    }
  return std::pow(s, 1.0 / q);
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }
}  // namespace

TEST_CASE("L^q space-time norm") {
  auto g = PeriodicGrid::make(2.7, 4, 4, 4, 4, 1.0, Backend::spectral);
  auto c = Field::generate(g, 1, [](int, int, std::size_t) { return -3.0; });
  for (double q : {1.0, 1.5, 2.0, 3.0}) CHECK(rel_close(lq_spacetime_norm(c, q), 3.0, 1e-14));
  auto big = PeriodicGrid::make(2.7, 4, 4, 4, 4, 2.0, Backend::spectral);
  auto cb = Field::generate(big, 1, [](int, int, std::size_t) { return 2.0; });
  CHECK(rel_close(lq_spacetime_norm(cb, 3.0), 2.0 * std::pow(8.0, 1.0 / 3.0), 1e-14));

  auto s = Field::generate(g, 1, [&](int t, int, std::size_t) { return std::sin(2 * kPi * t / g->nt()); });
  CHECK(std::abs(lq_spacetime_norm(s, 2.0) - 1.0 / std::sqrt(2.0)) < 1e-12);

  auto r = testutil::random_field(g, 3, 4);
  CHECK(rel_close(lq_spacetime_norm(r, 3.0), brute_lq(r, 3.0), 1e-12));
  CHECK(lq_spacetime_norm(r, kInfinity) == doctest::Approx(std::sqrt([&] {
          double m = 0;
          for (int t = 0; t < g->nt(); ++t)
            for (std::size_t cell = 0; cell < g->spatial_size(); ++cell)
              m = std::max(m, r(t, 0, cell) * r(t, 0, cell) + r(t, 1, cell) * r(t, 1, cell) + r(t, 2, cell) * r(t, 2, cell));
          return m;
        }())));
}

TEST_CASE("norms exclude solid cells") {
  auto g = PeriodicGrid::make(1.0, 2, 16, 16, 16, 4.0, Backend::exterior, ObstacleGeometry{1.0, 1.6});
  auto c = Field::generate(g, 1, [](int, int, std::size_t) { return 1.5; });
  CHECK(rel_close(lq_spacetime_norm(c, 2.0), 1.5 * std::sqrt(g->fluid_volume()), 1e-14));
  auto r = testutil::random_field(g, 1, 8);
  CHECK(rel_close(lq_spacetime_norm(r, 1.25), brute_lq(r, 1.25), 1e-12));
  CHECK(rel_close(homogeneous_d1q_norm(c, 1.5), 1.5 * g->annulus_volume(), 1e-13));
}

TEST_CASE("mixed norms") {
  auto g = PeriodicGrid::make(1.0, 6, 4, 4, 4, 1.3, Backend::spectral);
  auto f = testutil::random_field(g, 1, 11);
  for (double q : {1.5, 2.0, 3.0}) CHECK(mixed_rp_norm(f, q, q) == lq_spacetime_norm(f, q));
  auto c = Field::generate(g, 1, [](int, int, std::size_t) { return 0.7; });
  const double V = std::pow(1.3, 3);
  CHECK(rel_close(mixed_rp_norm(c, 4.0, 3.0), 0.7 * std::pow(V, 1.0 / 3.0), 1e-13));
  // two-stage brute force at (r, p) = (4, 3)
  double acc = 0.0;
  for (int t = 0; t < g->nt(); ++t) {
    double s = 0.0;
    for (std::size_t cell = 0; cell < g->spatial_size(); ++cell) s += std::pow(std::abs(f(t, 0, cell)), 3.0) * g->cell_volume();
    acc += std::pow(std::pow(s, 1.0 / 3.0), 4.0) / g->nt();
  }
  CHECK(rel_close(mixed_rp_norm(f, 4.0, 3.0), std::pow(acc, 0.25), 1e-12));
  CHECK(mixed_rp_norm(f, kInfinity, kInfinity) == lq_spacetime_norm(f, kInfinity));
}

TEST_CASE("Sobolev and Oseen norms against analytic derivatives") {
  auto g = PeriodicGrid::make(1.1, 8, 8, 8, 8, 2.0, Backend::spectral);
  auto c = Field::generate(g, 1, [](int, int, std::size_t) { return 2.0; });
  CHECK(sobolev_norm_12q(Field(g, 1), 1.5) == 0.0);
  CHECK(rel_close(sobolev_norm_12q(c, 1.5), 2.0 * std::pow(8.0, 1.0 / 1.5), 1e-12));

  TrigPoly p(5, 2, 2, 5);
  auto u = p.sample(g);
  const double q = 1.7;
  auto lqq = [&](std::array<int, 4> d) { return std::pow(lq_spacetime_norm(p.sample(g, d), q), q); };
  double s = lqq({0, 0, 0, 0}) + lqq({1, 0, 0, 0}) + lqq({0, 1, 0, 0}) + lqq({0, 0, 1, 0}) + lqq({0, 0, 0, 1});
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      std::array<int, 4> d{0, 0, 0, 0};
      d[static_cast<std::size_t>(i + 1)] += 1;
      d[static_cast<std::size_t>(j + 1)] += 1;
      s += lqq(d);
    }
  CHECK(rel_close(sobolev_norm_12q(u, q), std::pow(s, 1.0 / q), 1e-10));

  // X^q: four-term oracle on a steady band-limited vector field
  auto gs = PeriodicGrid::make(1.0, 2, 8, 8, 8, 2.0, Backend::spectral);
  std::array<TrigPoly, 3> vp{TrigPoly(6, 0, 2, 4), TrigPoly(7, 0, 2, 4), TrigPoly(8, 0, 2, 4)};
  auto v = testutil::sample_vector(gs, vp);
  const double qq = 4.0 / 3.0, lam = 1.0;
  auto grad = std::vector<Field>{testutil::sample_vector(gs, vp, {0, 1, 0, 0}), testutil::sample_vector(gs, vp, {0, 0, 1, 0}),
                                 testutil::sample_vector(gs, vp, {0, 0, 0, 1})};
  std::vector<Field> hess;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      std::array<int, 4> d{0, 0, 0, 0};
      d[static_cast<std::size_t>(i + 1)] += 1;
      d[static_cast<std::size_t>(j + 1)] += 1;
      hess.push_back(testutil::sample_vector(gs, vp, d));
    }
  const double oracle = std::sqrt(lam) * lq_spacetime_norm(v, 2 * qq / (2 - qq)) +
                        std::pow(lam, 0.25) * lq_norm_of_parts(grad, 4 * qq / (4 - qq), Region::fluid) +
                        lam * lq_spacetime_norm(grad[0], qq) + lq_norm_of_parts(hess, qq, Region::fluid);
  CHECK(rel_close(xoseen_norm(v, qq, lam), oracle, 1e-10));
  CHECK(xoseen_norm(Field(gs, 3), qq, lam) == 0.0);
  CHECK(rel_close(xoseen_norm(-2.5 * v, qq, 0.3), 2.5 * xoseen_norm(v, qq, 0.3), 1e-12));
  CHECK_THROWS(xoseen_norm(v, 2.0, 1.0));
  CHECK_THROWS(xoseen_norm(v, 1.5, 0.0));
}

TEST_CASE("homogeneous D^{1,q} norm") {
  auto g = PeriodicGrid::make(1.0, 4, 8, 8, 8, 1.0, Backend::spectral);
  TrigPoly p(9, 1, 2, 5);  // a single-term-free trig sum has zero spatial mean unless m = 0 terms appear
  auto f = p.sample(g);
  auto meanfree = f - Field::generate(g, 1, [&](int t, int, std::size_t) {
                    double m = 0;
                    for (std::size_t c = 0; c < g->spatial_size(); ++c) m += f(t, 0, c);
                    return m / static_cast<double>(g->spatial_size());
                  });
  CHECK(rel_close(homogeneous_d1q_norm(meanfree, 1.5), gradient_norm(meanfree, 1.5), 1e-12));
  // two-term brute force
  auto r = testutil::random_field(g, 1, 10);
  double second = 0.0;
  for (int t = 0; t < g->nt(); ++t) {
    double s = 0;
    for (std::size_t c = 0; c < g->spatial_size(); ++c) s += r(t, 0, c) * g->cell_volume();
    second += std::abs(s) / g->nt();
  }
  CHECK(rel_close(homogeneous_d1q_norm(r, 1.5), gradient_norm(r, 1.5) + second, 1e-12));
}

TEST_CASE("norm properties on random fields") {
  auto g = PeriodicGrid::make(1.0, 4, 8, 8, 8, 1.0, Backend::spectral);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (int trial = 0; trial < 6; ++trial) {
    auto a = testutil::random_field(g, 3, 200 + static_cast<std::uint64_t>(trial));
    auto b = testutil::random_field(g, 3, 300 + static_cast<std::uint64_t>(trial));
    const double s = ud(rng);
    for (double q : {1.25, 2.0, 3.5}) {
      CHECK(rel_close(lq_spacetime_norm(s * a, q), std::abs(s) * lq_spacetime_norm(a, q), 1e-10));
      CHECK(lq_spacetime_norm(a + b, q) <= (1 + 1e-10) * (lq_spacetime_norm(a, q) + lq_spacetime_norm(b, q)));
      CHECK(mixed_rp_norm(a + b, q, 2.5) <= (1 + 1e-10) * (mixed_rp_norm(a, q, 2.5) + mixed_rp_norm(b, q, 2.5)));
      CHECK(sobolev_norm_12q(a + b, q) <= (1 + 1e-10) * (sobolev_norm_12q(a, q) + sobolev_norm_12q(b, q)));
      CHECK(rel_close(sobolev_norm_12q(s * a, q), std::abs(s) * sobolev_norm_12q(a, q), 1e-10));
    }
  }
  // monotone in q for fields bounded by 1 on a unit-volume domain
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = Field::generate(g, 1, [&](int, int, std::size_t) { return unit(rng); });
    double prev = 0.0;
    for (double q : {1.0, 1.2, 1.5, 2.0, 3.0, 5.0, 8.0}) {
      const double v = lq_spacetime_norm(f, q);
      CHECK(v >= prev * (1 - 1e-14));
      prev = v;
    }
  }
}

TEST_CASE("admissible exponents") {
  auto e = admissible_exponents(0.5, 0.5, 2.0);
  CHECK(e.r0.value == doctest::Approx(4.0));
  CHECK_FALSE(e.r0.open);
  CHECK(e.p0.infinite());
  CHECK(e.p0.open);
  CHECK(e.r1.value == doctest::Approx(4.0));
  CHECK(e.p1.value == doctest::Approx(3.0));
  CHECK_FALSE(e.p1.open);

  auto b1 = admissible_exponents(0.0, 1.0, 1.5);
  CHECK(b1.r1.value == doctest::Approx(2 * 1.5 / (2 - 1.5)));
  auto b2 = admissible_exponents(0.0, 1.0, 2.0);
  CHECK(b2.r1.infinite());
  CHECK(b2.r1.open);
  CHECK(b2.p1.value == doctest::Approx(2.0));
  CHECK(b2.r0.value == doctest::Approx(2.0));
  CHECK(b2.p0.infinite());
  CHECK_FALSE(b2.p0.open);

  auto a0 = admissible_exponents(0.0, 0.0, 2.0);
  CHECK(a0.r0.value == doctest::Approx(2.0));

  CHECK_THROWS(admissible_exponents(2.5, 0.5, 2.0));
  CHECK_THROWS(admissible_exponents(0.5, 1.5, 2.0));
  CHECK(within_bounds(e.r0, e.p0, 2.0, 4.0, 100.0));
  CHECK_FALSE(within_bounds(e.r0, e.p0, 2.0, 4.0, kInfinity));
  CHECK_FALSE(within_bounds(e.r0, e.p0, 2.0, 4.5, 3.0));
  CHECK_FALSE(within_bounds(e.r0, e.p0, 2.0, 1.5, 3.0));
}

TEST_CASE("exponent map is exact") {
  auto a = exponent_map(Rational(6, 5));
  CHECK(a.r_3q == Rational(2));
  CHECK(a.theta == Rational(0));
  CHECK(a.lambda_exponent == Rational(1, 2));
  auto b = exponent_map(Rational(4, 3));
  CHECK(b.r_4q == Rational(2));
  CHECK(b.theta == Rational(1));
  CHECK(b.lambda_exponent == Rational(3, 4));
  CHECK(b.r_2q == Rational(4));
  // exact arithmetic oracle for q = 5/4: 3q/(3-q) = (15/4)/(7/4)
  auto c = exponent_map(Rational(5, 4));
  CHECK(c.r_3q == Rational(15, 7));
  CHECK(c.theta == Rational(2, 5));
  CHECK_THROWS(exponent_map(Rational(7, 5)));
  CHECK_THROWS(exponent_map(Rational(1)));
  // theta and the ordering 4q/(4-q) <= 2 <= 3q/(3-q) hold across the interval
  for (int num = 120; num <= 133; ++num) {
    const Rational q(num, 100);
    const auto m = exponent_map(q);
    CHECK(m.theta >= Rational(0));
    CHECK(m.theta <= Rational(1));
    CHECK(m.r_4q <= Rational(2));
    CHECK(m.r_3q >= Rational(2));
  }
  CHECK(Rational::parse("6/5") == Rational(12, 10));
  CHECK_THROWS(Rational::parse("6/0"));
  CHECK_THROWS(Rational::parse("x"));
}

TEST_CASE("norm report CSV") {
  NormReport r;
  r.add("a", 0.1);
  r.add("b", 2.0);
  CHECK(r.to_csv() == "label,value\na,0.10000000000000001\nb,2\n");
  CHECK_THROWS(r.add("c", -1.0));
}
