#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tpflow/fft.hpp"
#include "tpflow/grid.hpp"

namespace tpflow {

// Real T-periodic grid function with 1 or 3 components. Samples are stored in
// (t, component, z, y, x) order with t slowest. Instances are immutable; every
// operation returns a new field. An optional spectral cache holds the full
// space-time DFT coefficients in the same layout (temporal and spatial slots in FFT order),
// normalized so the (0,0) coefficient is the space-time mean.
class Field {
 public:
  Field(GridPtr grid, int ncomp);
  Field(GridPtr grid, int ncomp, std::vector<double> samples);

  template <class Fn>
  static Field generate(GridPtr grid, int ncomp, Fn&& fn) {
    std::vector<double> s(static_cast<std::size_t>(grid->nt()) * static_cast<std::size_t>(ncomp) * grid->spatial_size());
    std::size_t i = 0;
    for (int t = 0; t < grid->nt(); ++t)
      for (int c = 0; c < ncomp; ++c)
        for (std::size_t cell = 0; cell < grid->spatial_size(); ++cell) s[i++] = fn(t, c, cell);
    return Field(std::move(grid), ncomp, std::move(s));
  }

  const PeriodicGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int ncomp() const { return ncomp_; }
  std::size_t size() const { return samples_->size(); }
  std::span<const double> samples() const { return *samples_; }

  std::size_t offset(int t, int c) const {
    return (static_cast<std::size_t>(t) * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)) *
           grid_->spatial_size();
  }
  std::span<const double> block(int t, int c) const {
    return samples().subspan(offset(t, c), grid_->spatial_size());
  }
  double operator()(int t, int c, std::size_t cell) const { return (*samples_)[offset(t, c) + cell]; }

  bool has_spectral() const { return spectral_ != nullptr; }
  std::span<const cplx> spectral() const;
  Field with_spectral(std::vector<cplx> coeffs) const;

  Field component(int c) const;
  static Field stack(std::span<const Field> comps);
  double max_abs() const;
  bool compatible(const Field& o) const;

  Field operator-() const;
  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double a, Field f) { return f *= a; }
  friend Field operator*(Field f, double a) { return f *= a; }

 private:
  std::vector<double>& mutable_samples();
  GridPtr grid_;
  int ncomp_;
  std::shared_ptr<const std::vector<double>> samples_;
  std::shared_ptr<const std::vector<cplx>> spectral_;
};

Field to_spectral(const Field& f);
Field from_spectral(GridPtr grid, int ncomp, std::span<const cplx> coeffs);
// Largest |c(k,xi) - conj(c(-k,-xi))| relative to the largest coefficient.
double conjugate_symmetry_error(const Field& f);

// Pointwise product of a scalar field and a field with any component count.
Field multiply(const Field& scalar, const Field& f);
// Multiply every time slice by a time-only profile s(t).
Field scale_in_time(const Field& f, std::span<const double> profile);
// Spatially constant field with a time profile per component.
Field uniform_field(GridPtr grid, std::span<const std::vector<double>> profiles);
// Zero the samples of solid cells (no-op without obstacle).
Field zero_solid(const Field& f);

// One temporal Fourier coefficient of a field: complex samples in (component, z, y, x) order.
struct ModeField {
  GridPtr grid;
  int ncomp = 0;
  std::vector<cplx> data;

  ModeField() = default;
  ModeField(GridPtr g, int nc) : grid(std::move(g)), ncomp(nc), data(static_cast<std::size_t>(nc) * grid->spatial_size()) {}

  std::span<cplx> comp(int c) { return std::span<cplx>(data).subspan(static_cast<std::size_t>(c) * grid->spatial_size(), grid->spatial_size()); }
  std::span<const cplx> comp(int c) const {
    return std::span<const cplx>(data).subspan(static_cast<std::size_t>(c) * grid->spatial_size(), grid->spatial_size());
  }
};

// Temporal coefficients c_k = (1/n_t) sum_j f(t_j) exp(-2 pi i k j / n_t) for k = 0..kmax.
std::vector<ModeField> time_modes(const Field& f, int kmax);
// Real field sum_k c_k exp(2 pi i k t / T) + c.c. from modes k = 0..modes.size()-1 (mode 0 counted once).
Field from_time_modes(GridPtr grid, int ncomp, std::span<const ModeField> modes);

}  // namespace tpflow
