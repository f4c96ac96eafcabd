#include "tpflow/ops.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "tpflow/stencil.hpp"

namespace tpflow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Axis index in the 5D (t, c, z, y, x) sample layout: t=0, c=1, z=2, y=3, x=4.
std::array<fft::Dim, 5> layout(const Field& f) {
  const auto& g = f.grid();
  const auto S = static_cast<std::ptrdiff_t>(g.spatial_size());
  return {fft::Dim{g.nt(), f.ncomp() * S}, fft::Dim{f.ncomp(), S},
          fft::Dim{g.nz(), static_cast<std::ptrdiff_t>(g.nx()) * g.ny()}, fft::Dim{g.ny(), g.nx()},
          fft::Dim{g.nx(), 1}};
}

int layout_slot(Axis a) {
  switch (a) {
    case Axis::t: return 0;
    case Axis::z: return 2;
    case Axis::y: return 3;
    case Axis::x: return 4;
  }
  return 0;
}

// Multiply the 1D spectrum along one axis by mult(m) for signed wavenumber index m.
Field spectral_along(const Field& f, Axis axis, const std::function<cplx(int)>& mult) {
  const auto dims = layout(f);
  const int slot = layout_slot(axis);
  const std::array<fft::Dim, 1> tdim{dims[static_cast<std::size_t>(slot)]};
  std::array<fft::Dim, 4> batch{};
  int b = 0;
  for (int i = 0; i < 5; ++i)
    if (i != slot) batch[static_cast<std::size_t>(b++)] = dims[static_cast<std::size_t>(i)];
  std::vector<cplx> c(f.samples().begin(), f.samples().end());
  fft::transform(c.data(), tdim, batch, fft::Direction::forward);
  const int n = tdim[0].n;
  const std::ptrdiff_t stride = tdim[0].stride;
  std::vector<cplx> factor(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) factor[static_cast<std::size_t>(j)] = mult(fft::wavenumber(j, n)) / static_cast<double>(n);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto j = static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i) / stride) % n);
    c[i] *= factor[j];
  }
  fft::transform(c.data(), tdim, batch, fft::Direction::inverse);
  std::vector<double> s(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i].real();
  return Field(f.grid_ptr(), f.ncomp(), std::move(s));
}

double axis_length(const PeriodicGrid& g, Axis a) { return a == Axis::t ? g.period() : g.box_len(); }
int axis_count(const PeriodicGrid& g, Axis a) {
  switch (a) {
    case Axis::t: return g.nt();
    case Axis::x: return g.nx();
    case Axis::y: return g.ny();
    case Axis::z: return g.nz();
  }
  return 0;
}

Field spectral_first(const Field& f, Axis a) {
  const int n = axis_count(f.grid(), a);
  const double k0 = kTwoPi / axis_length(f.grid(), a);
  return spectral_along(f, a, [n, k0](int m) { return m == -n / 2 ? cplx(0.0) : cplx(0.0, k0 * m); });
}

Field spectral_second(const Field& f, Axis a) {
  const double k0 = kTwoPi / axis_length(f.grid(), a);
  return spectral_along(f, a, [k0](int m) { return cplx(-(k0 * m) * (k0 * m), 0.0); });
}

template <class Op>
Field blockwise(const Field& f, Op&& op) {
  std::vector<double> out(f.size());
  const std::size_t S = f.grid().spatial_size();
  for (int t = 0; t < f.grid().nt(); ++t)
    for (int c = 0; c < f.ncomp(); ++c) {
      const std::size_t o = f.offset(t, c);
      op(f.block(t, c), std::span<double>(out).subspan(o, S));
    }
  return Field(f.grid_ptr(), f.ncomp(), std::move(out));
}

int spatial_index(Axis a) { return a == Axis::x ? 0 : a == Axis::y ? 1 : 2; }

}  // namespace

Axis spatial_axis(int i) {
  if (i == 0) return Axis::x;
  if (i == 1) return Axis::y;
  if (i == 2) return Axis::z;
  throw std::invalid_argument("spatial axis index must be 0, 1 or 2");
}

Field project_steady(const Field& f) {
  const auto& g = f.grid();
  const std::size_t S = g.spatial_size();
  std::vector<double> mean(static_cast<std::size_t>(f.ncomp()) * S, 0.0);
  for (int t = 0; t < g.nt(); ++t)
    for (int c = 0; c < f.ncomp(); ++c) {
      auto b = f.block(t, c);
      double* m = mean.data() + static_cast<std::size_t>(c) * S;
      for (std::size_t i = 0; i < S; ++i) m[i] += b[i];
    }
  for (auto& v : mean) v /= g.nt();
  return Field::generate(f.grid_ptr(), f.ncomp(),
                         [&](int, int c, std::size_t cell) { return mean[static_cast<std::size_t>(c) * S + cell]; });
}

Field project_oscillatory(const Field& f) { return f - project_steady(f); }

Field diff(const Field& f, Axis axis) {
  const auto& g = f.grid();
  if (axis == Axis::t || g.backend() == Backend::spectral) return spectral_first(f, axis);
  const int i = spatial_index(axis);
  return blockwise(f, [&](std::span<const double> in, std::span<double> out) {
    stencil::first<double>(in, out, g.dims(), i, g.h(i));
  });
}

Field second_diff(const Field& f, int i, int j) {
  const auto& g = f.grid();
  if (i != j) return diff(diff(f, spatial_axis(i)), spatial_axis(j));
  if (g.backend() == Backend::spectral) return spectral_second(f, spatial_axis(i));
  return blockwise(f, [&](std::span<const double> in, std::span<double> out) {
    stencil::second<double>(in, out, g.dims(), i, g.h(i));
  });
}

Field divergence(const Field& u) {
  if (u.ncomp() != 3) throw std::invalid_argument("divergence needs a vector field");
  Field out = diff(u.component(0), Axis::x);
  out += diff(u.component(1), Axis::y);
  out += diff(u.component(2), Axis::z);
  return out;
}

Field gradient(const Field& p) {
  if (p.ncomp() != 1) throw std::invalid_argument("gradient needs a scalar field");
  const std::array<Field, 3> g{diff(p, Axis::x), diff(p, Axis::y), diff(p, Axis::z)};
  return Field::stack(g);
}

Field laplacian(const Field& f) {
  const auto& g = f.grid();
  if (g.backend() == Backend::spectral) {
    Field out = spectral_second(f, Axis::x);
    out += spectral_second(f, Axis::y);
    out += spectral_second(f, Axis::z);
    return out;
  }
  return blockwise(f, [&](std::span<const double> in, std::span<double> out) {
    stencil::laplacian<double>(in, out, g.dims(), g.spacing());
  });
}

Field dealias(const Field& f) {
  const auto& g = f.grid();
  Field s = to_spectral(f);
  std::vector<cplx> c(s.spectral().begin(), s.spectral().end());
  const auto& d = g.dims();
  auto keep = [](int j, int n) { return 3 * std::abs(fft::wavenumber(j, n)) < n; };
  for (int k = 0; k < g.nt(); ++k)
    for (int comp = 0; comp < f.ncomp(); ++comp)
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x)
            if (!(keep(k, g.nt()) && keep(z, d.nz) && keep(y, d.ny) && keep(x, d.nx)))
              c[f.offset(k, comp) + d.index(z, y, x)] = 0.0;
  return from_spectral(f.grid_ptr(), f.ncomp(), c);
}

Field filter_time_nyquist(const Field& f) {
  const int n = f.grid().nt();
  return spectral_along(f, Axis::t, [n](int m) { return m == -n / 2 ? cplx(0.0) : cplx(1.0); });
}

Field advect(const Field& u, const Field& v) {
  if (u.ncomp() != 3) throw std::invalid_argument("advect needs a vector advecting field");
  if (!u.grid().same_shape(v.grid()))
    throw std::invalid_argument("advect fields live on different grids");
  const bool spectral = u.grid().backend() == Backend::spectral;
  const Field ud = spectral ? dealias(u) : u;
  const Field vd = spectral ? dealias(v) : v;
  const std::array<Field, 3> d{diff(vd, Axis::x), diff(vd, Axis::y), diff(vd, Axis::z)};
  Field out(v.grid_ptr(), v.ncomp());
  for (int i = 0; i < 3; ++i) out += multiply(ud.component(i), d[static_cast<std::size_t>(i)]);
  return spectral ? dealias(out) : out;
}

Field leray_project(const Field& u) {
  const auto& g = u.grid();
  if (g.backend() != Backend::spectral) throw std::invalid_argument("leray_project requires the spectral backend");
  if (u.ncomp() != 3) throw std::invalid_argument("leray_project needs a vector field");
  std::vector<cplx> c(u.samples().begin(), u.samples().end());
  fft::transform3d(c, g.nx(), g.ny(), g.nz(), fft::Direction::forward);
  const auto& d = g.dims();
  const double k0 = kTwoPi / g.box_len();
  auto xi = [k0](int j, int n) {
    const int m = fft::wavenumber(j, n);
    return m == -n / 2 ? 0.0 : k0 * m;
  };
  const double inv = 1.0 / static_cast<double>(g.spatial_size());
  for (int t = 0; t < g.nt(); ++t)
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t cell = d.index(z, y, x);
          const std::array<double, 3> k{xi(x, d.nx), xi(y, d.ny), xi(z, d.nz)};
          const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
          std::array<cplx*, 3> p{};
          for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = &c[u.offset(t, i) + cell];
          if (k2 > 0.0) {
            const cplx dot = (k[0] * *p[0] + k[1] * *p[1] + k[2] * *p[2]) / k2;
            for (int i = 0; i < 3; ++i) *p[static_cast<std::size_t>(i)] -= k[static_cast<std::size_t>(i)] * dot;
          }
          for (auto* q : p) *q *= inv;
        }
  fft::transform3d(c, g.nx(), g.ny(), g.nz(), fft::Direction::inverse);
  std::vector<double> s(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i].real();
  return Field(u.grid_ptr(), 3, std::move(s));
}

}  // namespace tpflow
