#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "tpflow/ops.hpp"
#include "tpflow/tpof.hpp"
#include "trig_poly.hpp"

using namespace tpflow;
using testutil::max_diff;
using testutil::TrigPoly;

namespace {
constexpr double kPi = std::numbers::pi;

GridPtr spectral_grid(int nt, int n, double T = 1.3, double L = 2.0) {
  return PeriodicGrid::make(T, nt, n, n, n, L, Backend::spectral);
}
}  // namespace

TEST_CASE("grid invariants are enforced") {
  CHECK_THROWS_AS(PeriodicGrid::make(1.0, 3, 8, 8, 8, 1.0, Backend::spectral), GridError);
  CHECK_THROWS_AS(PeriodicGrid::make(1.0, 4, 6, 8, 2, 1.0, Backend::spectral), GridError);
  CHECK_THROWS_AS(PeriodicGrid::make(-1.0, 4, 8, 8, 8, 1.0, Backend::spectral), GridError);
  CHECK_THROWS_AS(PeriodicGrid::make(1.0, 4, 8, 8, 8, 1.0, Backend::spectral, ObstacleGeometry{0.2, 0.3}), GridError);
  // radius too large for a two-cell clearance
  CHECK_THROWS_AS(PeriodicGrid::make(1.0, 4, 16, 16, 16, 1.0, Backend::exterior, ObstacleGeometry{0.4, 0.45}), GridError);
  CHECK_NOTHROW(PeriodicGrid::make(1.0, 4, 16, 16, 16, 1.0, Backend::exterior, ObstacleGeometry{0.25, 0.4}));
}

TEST_CASE("obstacle mask: boundary cells, normals and symmetry") {
  auto g = PeriodicGrid::make(1.0, 2, 24, 24, 24, 6.0, Backend::exterior, ObstacleGeometry{1.1, 2.0});
  const auto& ob = *g->obstacle();
  const auto& d = g->dims();
  REQUIRE(ob.boundary_cells().size() > 0);
  Vec3 sum{0, 0, 0};
  for (std::size_t b = 0; b < ob.boundary_cells().size(); ++b) {
    const auto& n = ob.normals()[b];
    CHECK(std::abs(std::hypot(n[0], n[1], n[2]) - 1.0) < 1e-12);
    for (int i = 0; i < 3; ++i) sum[static_cast<std::size_t>(i)] += n[static_cast<std::size_t>(i)];
  }
  for (double s : sum) CHECK(std::abs(s) < 1e-10);
  // Brute force: boundary iff fluid with a solid 6-neighbour.
  for (std::size_t c = 0; c < d.count(); ++c) {
    const auto [x, y, z] = d.coords(c);
    bool touches = false;
    for (auto [dx, dy, dz] : std::array<std::array<int, 3>, 6>{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}})
      touches = touches || ob.solid(d.index((z + dz + d.nz) % d.nz, (y + dy + d.ny) % d.ny, (x + dx + d.nx) % d.nx));
    CHECK(ob.boundary(c) == (!ob.solid(c) && touches));
    const auto p = g->position(c);
    const double r = std::hypot(p[0] - 3.0, p[1] - 3.0, p[2] - 3.0);
    CHECK(ob.solid(c) == (r < 1.1));
    // mirror symmetry of the voxelization
    const auto m = d.index((d.nz - z) % d.nz, (d.ny - y) % d.ny, (d.nx - x) % d.nx);
    CHECK(ob.solid(c) == ob.solid(m));
  }
}

TEST_CASE("spectral transform: mean normalization and Euler formula") {
  auto g = spectral_grid(4, 4);
  Field c = Field::generate(g, 1, [](int, int, std::size_t) { return 2.5; });
  auto s = to_spectral(c);
  CHECK(std::abs(s.spectral()[0] - cplx(2.5)) < 1e-14);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s.spectral()[i]) < 1e-14);

  Field f = Field::generate(g, 1, [&](int t, int, std::size_t) { return std::cos(2 * kPi * t * g->dt() / g->period()); });
  auto fs = to_spectral(f);
  const std::size_t S = g->spatial_size();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const bool target = (i == S) || (i == 3 * S);  // k = 1 and k = -1 at xi = 0
    CHECK(std::abs(fs.spectral()[i] - cplx(target ? 0.5 : 0.0)) < 1e-14);
  }
}

TEST_CASE("spectral transform matches brute-force DFT on a 4x4x4x4 grid") {
  auto g = spectral_grid(4, 4);
  auto f = testutil::random_field(g, 3, 7);
  auto s = to_spectral(f);
  const auto& d = g->dims();
  const int nt = g->nt();
  double err = 0.0;
  for (int k = 0; k < nt; ++k)
    for (int c = 0; c < 3; ++c)
      for (int kz = 0; kz < d.nz; ++kz)
        for (int ky = 0; ky < d.ny; ++ky)
          for (int kx = 0; kx < d.nx; ++kx) {
            cplx acc = 0.0;
            for (int t = 0; t < nt; ++t)
              for (int z = 0; z < d.nz; ++z)
                for (int y = 0; y < d.ny; ++y)
                  for (int x = 0; x < d.nx; ++x) {
                    const double ph = -2 * kPi * (double(k * t) / nt + double(kz * z) / d.nz + double(ky * y) / d.ny + double(kx * x) / d.nx);
                    acc += f(t, c, d.index(z, y, x)) * std::polar(1.0, ph);
                  }
            acc /= double(nt * d.count());
            err = std::max(err, std::abs(acc - s.spectral()[s.offset(k, c) + d.index(kz, ky, kx)]));
          }
  CHECK(err < 1e-13);
  auto back = from_spectral(g, 3, s.spectral());
  CHECK(max_diff(back, f) < 1e-12 * f.max_abs());
  CHECK(conjugate_symmetry_error(s) < 1e-14);
  CHECK(conjugate_symmetry_error(back) < 1e-14);
}

TEST_CASE("projections") {
  auto g = spectral_grid(8, 4);
  auto gx = TrigPoly(3, 0, 1, 3).sample(g);
  auto sin_t = Field::generate(g, 1, [&](int t, int, std::size_t) { return std::sin(2 * kPi * t / g->nt()); });
  auto cos_t = Field::generate(g, 1, [&](int t, int, std::size_t) { return std::cos(2 * kPi * t / g->nt()); });
  auto prod = multiply(sin_t, gx);
  CHECK(project_steady(gx).max_abs() > 0);
  CHECK(max_diff(project_steady(gx), gx) < 1e-14);
  CHECK(project_steady(prod).max_abs() < 1e-14);
  CHECK(max_diff(project_oscillatory(prod), prod) < 1e-15);
  CHECK(project_oscillatory(gx).max_abs() < 1e-14);
  auto a = Field::generate(g, 1, [](int, int, std::size_t) { return 1.75; });
  auto mix = a + 3.0 * cos_t;
  CHECK(max_diff(project_steady(mix), a) < 1e-14);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto f = testutil::random_field(g, 3, seed);
    const auto P = project_steady(f), Q = project_oscillatory(f);
    CHECK(max_diff(project_steady(P), P) < 1e-13);
    CHECK(max_diff(P + Q, f) < 1e-13);
    CHECK(project_steady(Q).max_abs() < 1e-13);
  }
}

TEST_CASE("spectral derivatives are exact for trigonometric polynomials") {
  auto g = spectral_grid(8, 8, 1.7, 3.0);
  auto s = Field::generate(g, 1, [&](int, int, std::size_t c) { return std::sin(2 * kPi * g->position(c)[0] / g->box_len()); });
  auto ds = Field::generate(g, 1, [&](int, int, std::size_t c) {
    return 2 * kPi / g->box_len() * std::cos(2 * kPi * g->position(c)[0] / g->box_len());
  });
  CHECK(max_diff(diff(s, Axis::x), ds) < 1e-12);
  CHECK(max_diff(laplacian(s), -std::pow(2 * kPi / g->box_len(), 2) * s) < 1e-11);
  auto one = Field::generate(g, 1, [](int, int, std::size_t) { return 4.0; });
  for (auto a : {Axis::t, Axis::x, Axis::y, Axis::z}) CHECK(diff(one, a).max_abs() < 1e-13);

  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    TrigPoly p(seed, 3, 3, 6);
    auto f = p.sample(g);
    CHECK(max_diff(diff(f, Axis::t), p.sample(g, {1, 0, 0, 0})) < 1e-10);
    CHECK(max_diff(diff(f, Axis::x), p.sample(g, {0, 1, 0, 0})) < 1e-10);
    CHECK(max_diff(diff(f, Axis::y), p.sample(g, {0, 0, 1, 0})) < 1e-10);
    CHECK(max_diff(diff(f, Axis::z), p.sample(g, {0, 0, 0, 1})) < 1e-10);
    CHECK(max_diff(second_diff(f, 0, 2), p.sample(g, {0, 1, 0, 1})) < 1e-9);
    CHECK(max_diff(divergence(gradient(f)), laplacian(f)) < 1e-11 * std::max(1.0, laplacian(f).max_abs()));
  }
}

TEST_CASE("finite-difference operators converge at second order") {
  TrigPoly p(21, 1, 1, 4);
  std::vector<double> errs;
  for (int n : {16, 32}) {
    auto g = PeriodicGrid::make(1.0, 4, n, n, n, 1.0, Backend::exterior);
    auto f = p.sample(g);
    auto e1 = max_diff(diff(f, Axis::y), p.sample(g, {0, 0, 1, 0}));
    auto e2 = max_diff(laplacian(f), p.sample(g, {0, 2, 0, 0}) + p.sample(g, {0, 0, 2, 0}) + p.sample(g, {0, 0, 0, 2}));
    // the time derivative stays spectral on this backend
    CHECK(max_diff(diff(f, Axis::t), p.sample(g, {1, 0, 0, 0})) < 1e-10);
    errs.push_back(e1);
    errs.push_back(e2);
  }
  CHECK(std::log2(errs[0] / errs[2]) > 1.9);
  CHECK(std::log2(errs[1] / errs[3]) > 1.9);
}

TEST_CASE("curl-form fields are divergence free") {
  auto g = spectral_grid(4, 8);
  std::array<TrigPoly, 3> psi{TrigPoly(31, 1, 2, 4), TrigPoly(32, 1, 2, 4), TrigPoly(33, 1, 2, 4)};
  std::array<Field, 3> P{psi[0].sample(g), psi[1].sample(g), psi[2].sample(g)};
  std::array<Field, 3> u{diff(P[2], Axis::y) - diff(P[1], Axis::z), diff(P[0], Axis::z) - diff(P[2], Axis::x),
                         diff(P[1], Axis::x) - diff(P[0], Axis::y)};
  auto U = Field::stack(u);
  CHECK(divergence(U).max_abs() < 1e-11);
}

TEST_CASE("advection") {
  auto g = spectral_grid(8, 8, 1.0, 2.0);
  std::array<TrigPoly, 3> up{TrigPoly(41, 1, 1, 3), TrigPoly(42, 1, 1, 3), TrigPoly(43, 1, 1, 3)};
  std::array<TrigPoly, 3> vp{TrigPoly(44, 1, 1, 3), TrigPoly(45, 1, 1, 3), TrigPoly(46, 0, 1, 3)};
  auto u = testutil::sample_vector(g, up), v = testutil::sample_vector(g, vp);
  CHECK(advect(Field(g, 3), v).max_abs() == 0.0);
  auto c = Field::generate(g, 3, [](int, int comp, std::size_t) { return comp == 0 ? 1.5 : 0.0; });
  CHECK(max_diff(advect(c, v), 1.5 * diff(v, Axis::x)) < 1e-12);
  // brute-force pointwise oracle of u_i d_i v_j
  auto out = advect(u, v);
  double err = 0.0;
  for (int t = 0; t < g->nt(); ++t)
    for (std::size_t cell = 0; cell < g->spatial_size(); ++cell) {
      const auto x = g->position(cell);
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) {
          std::array<int, 4> d{0, 0, 0, 0};
          d[static_cast<std::size_t>(i + 1)] = 1;
          s += up[static_cast<std::size_t>(i)].eval(t * g->dt(), x, 1.0, 2.0) * vp[static_cast<std::size_t>(j)].eval(t * g->dt(), x, 1.0, 2.0, d);
        }
        err = std::max(err, std::abs(s - out(t, j, cell)));
      }
    }
  CHECK(err < 1e-10);
}

TEST_CASE("dealiasing leaves no energy in the truncated band") {
  auto g = spectral_grid(6, 8);
  auto f = dealias(testutil::random_field(g, 1, 5));
  auto s = to_spectral(f);
  const auto& d = g->dims();
  for (int k = 0; k < g->nt(); ++k)
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const bool cut = 3 * std::abs(fft::wavenumber(k, 6)) >= 6 || 3 * std::abs(fft::wavenumber(x, 8)) >= 8 ||
                           3 * std::abs(fft::wavenumber(y, 8)) >= 8 || 3 * std::abs(fft::wavenumber(z, 8)) >= 8;
          if (cut) CHECK(std::abs(s.spectral()[s.offset(k, 0) + d.index(z, y, x)]) < 1e-15);
        }
}

TEST_CASE("Leray projection") {
  const double L = 2.0;
  auto g = spectral_grid(2, 8, 1.0, L);
  // single coefficient at xi = (2 pi / L)(1, 1, 0)
  const auto& d = g->dims();
  std::vector<cplx> c(static_cast<std::size_t>(g->nt()) * 3 * d.count());
  c[d.index(0, 1, 1)] = 0.5;
  c[d.index(0, 7, 7)] = 0.5;  // conjugate partner at -xi keeps the field real
  auto u = from_spectral(g, 3, c);
  auto pu = to_spectral(leray_project(u));
  const std::size_t S = d.count();
  // per unit coefficient the projection gives (1/2, -1/2, 0)
  CHECK(std::abs(pu.spectral()[d.index(0, 1, 1)] / 0.5 - cplx(0.5)) < 1e-13);
  CHECK(std::abs(pu.spectral()[S + d.index(0, 1, 1)] / 0.5 - cplx(-0.5)) < 1e-13);
  CHECK(std::abs(pu.spectral()[2 * S + d.index(0, 1, 1)]) < 1e-13);

  TrigPoly p(51, 1, 3, 6);
  auto grad = gradient(p.sample(g));
  CHECK(leray_project(grad).max_abs() < 1e-12 * grad.max_abs());

  for (std::uint64_t seed = 60; seed < 63; ++seed) {
    auto a = testutil::random_field(g, 3, seed), b = testutil::random_field(g, 3, seed + 100);
    auto Pa = leray_project(a), Pb = leray_project(b);
    CHECK(divergence(Pa).max_abs() < 1e-11);
    CHECK(max_diff(leray_project(Pa), Pa) < 1e-11);
    double ab = 0, ba = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += Pa.samples()[i] * b.samples()[i];
      ba += a.samples()[i] * Pb.samples()[i];
    }
    CHECK(std::abs(ab - ba) < 1e-11 * std::max(1.0, std::abs(ab)));
  }
  auto ext = PeriodicGrid::make(1.0, 2, 8, 8, 8, 1.0, Backend::exterior);
  CHECK_THROWS(leray_project(Field(ext, 3)));
}

TEST_CASE("temporal mode decomposition round-trips without the Nyquist mode") {
  auto g = spectral_grid(8, 4);
  TrigPoly p(71, 3, 1, 6);
  auto f = p.sample(g);
  auto modes = time_modes(f, 3);
  auto back = from_time_modes(g, 1, modes);
  CHECK(max_diff(back, f) < 1e-13);
  auto steady = from_time_modes(g, 1, std::span(modes).first(1));
  CHECK(max_diff(steady, project_steady(f)) < 1e-13);
  auto raw = testutil::random_field(g, 1, 3);
  CHECK(max_diff(from_time_modes(g, 1, time_modes(raw, 3)), filter_time_nyquist(raw)) < 1e-13);
}

TEST_CASE("TPOF round trip and header errors") {
  auto g = spectral_grid(2, 4, 1.25, 3.5);
  auto f = testutil::random_field(g, 3, 9);
  auto bytes = encode_tpof(f);
  REQUIRE(bytes.size() == 4 + 4 * 6 + 16 + f.size() * 8);
  CHECK(bytes[0] == 'T');
  CHECK(bytes[4] == 1);
  auto d = decode_tpof(bytes);
  auto back = tpof_to_field(d, g);
  CHECK(encode_tpof(back) == bytes);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(back.samples()[i] == f.samples()[i]);
  CHECK(d.period == 1.25);
  CHECK(d.box_len == 3.5);

  auto expect_field = [](std::vector<std::uint8_t> b, const std::string& name) {
    try {
      decode_tpof(b);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.field() == name);
    }
  };
  auto bad = bytes;
  bad[1] = 'X';
  expect_field(bad, "magic");
  bad = bytes;
  bad[4] = 2;
  expect_field(bad, "version");
  bad = bytes;
  bad[24] = 2;  // ncomp
  expect_field(bad, "ncomp");
  bad = bytes;
  bad.resize(30);
  expect_field(bad, "T");
  bad = bytes;
  bad.pop_back();
  expect_field(bad, "samples");

  const auto path = std::filesystem::temp_directory_path() / "tpflow_roundtrip.tpof";
  write_tpof(f, path);
  auto again = tpof_to_field(read_tpof(path), g);
  CHECK(encode_tpof(again) == bytes);
  std::filesystem::remove(path);
}
