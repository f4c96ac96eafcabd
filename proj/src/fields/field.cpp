#include "tpflow/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace tpflow {

Field::Field(GridPtr grid, int ncomp)
    : Field(grid, ncomp,
            std::vector<double>(static_cast<std::size_t>(grid->nt()) * static_cast<std::size_t>(ncomp) *
                                grid->spatial_size())) {}

Field::Field(GridPtr grid, int ncomp, std::vector<double> samples) : grid_(std::move(grid)), ncomp_(ncomp) {
  if (!grid_) throw std::invalid_argument("field needs a grid");
  if (ncomp != 1 && ncomp != 3) throw std::invalid_argument("field component count must be 1 or 3");
  const std::size_t expected = static_cast<std::size_t>(grid_->nt()) * static_cast<std::size_t>(ncomp) * grid_->spatial_size();
  if (samples.size() != expected) throw std::invalid_argument("sample array does not match the grid shape");
  for (double v : samples)
    if (!std::isfinite(v)) throw std::invalid_argument("field samples must be finite");
  samples_ = std::make_shared<const std::vector<double>>(std::move(samples));
}

std::span<const cplx> Field::spectral() const {
  if (!spectral_) throw std::logic_error("field has no spectral cache");
  return *spectral_;
}

Field Field::with_spectral(std::vector<cplx> coeffs) const {
  if (coeffs.size() != size()) throw std::invalid_argument("spectral cache does not match the field shape");
  Field out = *this;
  out.spectral_ = std::make_shared<const std::vector<cplx>>(std::move(coeffs));
  return out;
}

std::vector<double>& Field::mutable_samples() {
  // Copy on write keeps other holders of the buffer untouched.
  auto fresh = std::make_shared<std::vector<double>>(*samples_);
  auto& ref = *fresh;
  samples_ = std::move(fresh);
  spectral_.reset();
  return ref;
}

Field Field::component(int c) const {
  const std::size_t S = grid_->spatial_size();
  std::vector<double> out(static_cast<std::size_t>(grid_->nt()) * S);
  for (int t = 0; t < grid_->nt(); ++t) {
    auto b = block(t, c);
    std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * S));
  }
  return Field(grid_, 1, std::move(out));
}

Field Field::stack(std::span<const Field> comps) {
  if (comps.size() != 3) throw std::invalid_argument("stack needs three scalar fields");
  const auto& g = comps[0].grid_ptr();
  const std::size_t S = g->spatial_size();
  std::vector<double> out(static_cast<std::size_t>(g->nt()) * 3 * S);
  for (int t = 0; t < g->nt(); ++t)
    for (int c = 0; c < 3; ++c) {
      if (comps[static_cast<std::size_t>(c)].ncomp() != 1) throw std::invalid_argument("stack needs scalar fields");
      auto b = comps[static_cast<std::size_t>(c)].block(t, 0);
      std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(t) * 3 + static_cast<std::size_t>(c)) * S));
    }
  return Field(g, 3, std::move(out));
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : samples()) m = std::max(m, std::abs(v));
  return m;
}

bool Field::compatible(const Field& o) const {
  return ncomp_ == o.ncomp_ && (grid_ == o.grid_ || grid_->same_shape(*o.grid_));
}

Field Field::operator-() const {
  Field out = *this;
  for (auto& v : out.mutable_samples()) v = -v;
  return out;
}

Field& Field::operator+=(const Field& o) {
  if (!compatible(o)) throw std::invalid_argument("field shapes differ");
  auto& s = mutable_samples();
  auto os = o.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += os[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (!compatible(o)) throw std::invalid_argument("field shapes differ");
  auto& s = mutable_samples();
  auto os = o.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] -= os[i];
  return *this;
}

Field& Field::operator*=(double a) {
  for (auto& v : mutable_samples()) v *= a;
  return *this;
}

namespace {

std::array<fft::Dim, 4> spacetime_dims(const PeriodicGrid& g, int ncomp) {
  const auto S = static_cast<std::ptrdiff_t>(g.spatial_size());
  return {fft::Dim{g.nt(), ncomp * S}, fft::Dim{g.nz(), static_cast<std::ptrdiff_t>(g.nx()) * g.ny()},
          fft::Dim{g.ny(), g.nx()}, fft::Dim{g.nx(), 1}};
}

}  // namespace

Field to_spectral(const Field& f) {
  const auto& g = f.grid();
  std::vector<cplx> c(f.samples().begin(), f.samples().end());
  const auto dims = spacetime_dims(g, f.ncomp());
  const std::array<fft::Dim, 1> batch{fft::Dim{f.ncomp(), static_cast<std::ptrdiff_t>(g.spatial_size())}};
  fft::transform(c.data(), dims, batch, fft::Direction::forward);
  const double scale = 1.0 / (static_cast<double>(g.nt()) * static_cast<double>(g.spatial_size()));
  for (auto& v : c) v *= scale;
  return f.with_spectral(std::move(c));
}

Field from_spectral(GridPtr grid, int ncomp, std::span<const cplx> coeffs) {
  std::vector<cplx> c(coeffs.begin(), coeffs.end());
  const auto dims = spacetime_dims(*grid, ncomp);
  const std::array<fft::Dim, 1> batch{fft::Dim{ncomp, static_cast<std::ptrdiff_t>(grid->spatial_size())}};
  fft::transform(c.data(), dims, batch, fft::Direction::inverse);
  std::vector<double> s(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i].real();
  Field out(grid, ncomp, std::move(s));
  return out.with_spectral(std::vector<cplx>(coeffs.begin(), coeffs.end()));
}

double conjugate_symmetry_error(const Field& f) {
  auto c = f.spectral();
  const auto& g = f.grid();
  const auto& d = g.dims();
  double err = 0.0, scale = 0.0;
  for (auto v : c) scale = std::max(scale, std::abs(v));
  auto neg = [](int j, int n) { return (n - j) % n; };
  for (int k = 0; k < g.nt(); ++k)
    for (int comp = 0; comp < f.ncomp(); ++comp)
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x) {
            const auto a = c[f.offset(k, comp) + d.index(z, y, x)];
            const auto b = c[f.offset(neg(k, g.nt()), comp) + d.index(neg(z, d.nz), neg(y, d.ny), neg(x, d.nx))];
            err = std::max(err, std::abs(a - std::conj(b)));
          }
  return scale > 0.0 ? err / scale : 0.0;
}

Field multiply(const Field& scalar, const Field& f) {
  if (scalar.ncomp() != 1) throw std::invalid_argument("multiply expects a scalar first factor");
  const std::size_t S = f.grid().spatial_size();
  std::vector<double> out(f.size());
  for (int t = 0; t < f.grid().nt(); ++t) {
    auto s = scalar.block(t, 0);
    for (int c = 0; c < f.ncomp(); ++c) {
      auto b = f.block(t, c);
      const std::size_t o = f.offset(t, c);
      for (std::size_t i = 0; i < S; ++i) out[o + i] = s[i] * b[i];
    }
  }
  return Field(f.grid_ptr(), f.ncomp(), std::move(out));
}

Field scale_in_time(const Field& f, std::span<const double> profile) {
  if (profile.size() != static_cast<std::size_t>(f.grid().nt())) throw std::invalid_argument("profile length must equal n_t");
  std::vector<double> out(f.samples().begin(), f.samples().end());
  const std::size_t S = f.grid().spatial_size();
  for (int t = 0; t < f.grid().nt(); ++t)
    for (int c = 0; c < f.ncomp(); ++c) {
      const std::size_t o = f.offset(t, c);
      for (std::size_t i = 0; i < S; ++i) out[o + i] *= profile[static_cast<std::size_t>(t)];
    }
  return Field(f.grid_ptr(), f.ncomp(), std::move(out));
}

Field uniform_field(GridPtr grid, std::span<const std::vector<double>> profiles) {
  const int nc = static_cast<int>(profiles.size());
  return Field::generate(grid, nc, [&](int t, int c, std::size_t) {
    return profiles[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
  });
}

Field zero_solid(const Field& f) {
  const auto* ob = f.grid().obstacle();
  if (!ob) return f;
  std::vector<double> out(f.samples().begin(), f.samples().end());
  const std::size_t S = f.grid().spatial_size();
  for (int t = 0; t < f.grid().nt(); ++t)
    for (int c = 0; c < f.ncomp(); ++c) {
      const std::size_t o = f.offset(t, c);
      for (std::size_t i = 0; i < S; ++i)
        if (ob->solid(i)) out[o + i] = 0.0;
    }
  return Field(f.grid_ptr(), f.ncomp(), std::move(out));
}

std::vector<ModeField> time_modes(const Field& f, int kmax) {
  const auto& g = f.grid();
  if (kmax < 0 || kmax > g.nt() / 2) throw std::invalid_argument("temporal mode index out of range");
  const std::size_t block = static_cast<std::size_t>(f.ncomp()) * g.spatial_size();
  std::vector<cplx> c(f.samples().begin(), f.samples().end());
  const std::array<fft::Dim, 1> dims{fft::Dim{g.nt(), static_cast<std::ptrdiff_t>(block)}};
  const std::array<fft::Dim, 1> batch{fft::Dim{static_cast<int>(block), 1}};
  fft::transform(c.data(), dims, batch, fft::Direction::forward);
  const double scale = 1.0 / g.nt();
  std::vector<ModeField> out;
  out.reserve(static_cast<std::size_t>(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) {
    ModeField m(f.grid_ptr(), f.ncomp());
    const auto first = c.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * block);
    std::transform(first, first + static_cast<std::ptrdiff_t>(block), m.data.begin(), [&](cplx v) { return v * scale; });
    out.push_back(std::move(m));
  }
  return out;
}

Field from_time_modes(GridPtr grid, int ncomp, std::span<const ModeField> modes) {
  const int nt = grid->nt();
  if (modes.size() > static_cast<std::size_t>(nt / 2)) throw std::invalid_argument("too many temporal modes for n_t");
  const std::size_t block = static_cast<std::size_t>(ncomp) * grid->spatial_size();
  std::vector<cplx> c(static_cast<std::size_t>(nt) * block);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const auto& m = modes[k];
    if (m.data.size() != block) throw std::invalid_argument("mode field shape mismatch");
    std::copy(m.data.begin(), m.data.end(), c.begin() + static_cast<std::ptrdiff_t>(k * block));
    if (k == 0) continue;
    auto neg = c.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(nt) - k) * block);
    std::transform(m.data.begin(), m.data.end(), neg, [](cplx v) { return std::conj(v); });
  }
  if (!modes.empty())
    for (std::size_t i = 0; i < block; ++i) c[i] = c[i].real();
  const std::array<fft::Dim, 1> dims{fft::Dim{nt, static_cast<std::ptrdiff_t>(block)}};
  const std::array<fft::Dim, 1> batch{fft::Dim{static_cast<int>(block), 1}};
  fft::transform(c.data(), dims, batch, fft::Direction::inverse);
  std::vector<double> s(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i].real();
  return Field(std::move(grid), ncomp, std::move(s));
}

}  // namespace tpflow
