#include "tpflow/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tpflow {

std::string to_string(Backend b) { return b == Backend::spectral ? "spectral" : "exterior"; }

Backend backend_from_string(const std::string& s) {
  if (s == "spectral") return Backend::spectral;
  if (s == "exterior") return Backend::exterior;
  throw GridError("unknown backend '" + s + "'");
}

std::array<int, 3> SpatialDims::coords(std::size_t cell) const {
  const auto x = static_cast<int>(cell % static_cast<std::size_t>(nx));
  const auto rest = cell / static_cast<std::size_t>(nx);
  const auto y = static_cast<int>(rest % static_cast<std::size_t>(ny));
  const auto z = static_cast<int>(rest / static_cast<std::size_t>(ny));
  return {x, y, z};
}

ObstacleMask::ObstacleMask(const SpatialDims& dims, const Vec3& spacing, ObstacleGeometry geom) : geom_(geom) {
  center_ = {dims.nx / 2 * spacing[0], dims.ny / 2 * spacing[1], dims.nz / 2 * spacing[2]};
  const std::size_t n = dims.count();
  solid_.assign(n, 0);
  annulus_.assign(n, 0);
  boundary_slot_.assign(n, -1);
  std::vector<double> radius(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto [x, y, z] = dims.coords(c);
    const double dx = x * spacing[0] - center_[0];
    const double dy = y * spacing[1] - center_[1];
    const double dz = z * spacing[2] - center_[2];
    radius[c] = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (radius[c] < geom.radius_star) {
      solid_[c] = 1;
      ++solid_count_;
    }
  }
  auto wrap = [](int i, int m) { return (i % m + m) % m; };
  for (std::size_t c = 0; c < n; ++c) {
    if (solid_[c]) continue;
    if (radius[c] < geom.radius_zero) {
      annulus_[c] = 1;
      ++annulus_count_;
    }
    const auto [x, y, z] = dims.coords(c);
    const std::array<std::size_t, 6> nb{
        dims.index(z, y, wrap(x + 1, dims.nx)), dims.index(z, y, wrap(x - 1, dims.nx)),
        dims.index(z, wrap(y + 1, dims.ny), x), dims.index(z, wrap(y - 1, dims.ny), x),
        dims.index(wrap(z + 1, dims.nz), y, x), dims.index(wrap(z - 1, dims.nz), y, x)};
    bool touches = false;
    for (auto m : nb) touches = touches || solid_[m];
    if (!touches) continue;
    boundary_slot_[c] = static_cast<std::int64_t>(boundary_.size());
    boundary_.push_back(c);
    const double r = radius[c];
    normals_.push_back({(x * spacing[0] - center_[0]) / r, (y * spacing[1] - center_[1]) / r,
                        (z * spacing[2] - center_[2]) / r});
  }
}

GridPtr PeriodicGrid::make(double period, int nt, int nx, int ny, int nz, double box_len, Backend backend,
                           std::optional<ObstacleGeometry> obstacle) {
  if (!(period > 0.0) || !std::isfinite(period)) throw GridError("period must be positive");
  if (!(box_len > 0.0) || !std::isfinite(box_len)) throw GridError("box length must be positive");
  if (nt < 2 || nt % 2 != 0) throw GridError("n_t must be even and at least 2");
  for (int m : {nx, ny, nz})
    if (m < 4 || m % 2 != 0) throw GridError("spatial sample counts must be even and at least 4");
  auto g = std::shared_ptr<PeriodicGrid>(new PeriodicGrid());
  g->period_ = period;
  g->nt_ = nt;
  g->dims_ = {nx, ny, nz};
  g->box_len_ = box_len;
  g->spacing_ = {box_len / nx, box_len / ny, box_len / nz};
  g->backend_ = backend;
  if (obstacle) {
    if (backend != Backend::exterior) throw GridError("an obstacle requires the exterior backend");
    const double hmax = std::max({g->spacing_[0], g->spacing_[1], g->spacing_[2]});
    if (!(obstacle->radius_star > 0.0)) throw GridError("obstacle radius_star must be positive");
    if (!(obstacle->radius_zero > obstacle->radius_star))
      throw GridError("obstacle radius_zero must exceed radius_star");
    if (obstacle->radius_star > 0.5 * box_len - 2.0 * hmax)
      throw GridError("obstacle needs a clearance of at least two cells inside the box");
    if (obstacle->radius_zero > 0.5 * box_len) throw GridError("obstacle radius_zero must not exceed half the box");
    g->obstacle_.emplace(g->dims_, g->spacing_, *obstacle);
    if (g->obstacle_->solid_count() == 0) throw GridError("obstacle radius_star is below grid resolution");
    const auto& d = g->dims_;
    g->stencil_interior_.assign(d.count(), 1);
    auto wrap = [](int i, int m) { return (i % m + m) % m; };
    for (std::size_t c = 0; c < d.count(); ++c) {
      if (!g->obstacle_->solid(c)) continue;
      const auto [x, y, z] = d.coords(c);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            g->stencil_interior_[d.index(wrap(z + dz, d.nz), wrap(y + dy, d.ny), wrap(x + dx, d.nx))] = 0;
    }
  }
  return g;
}

double PeriodicGrid::omega() const { return 2.0 * std::numbers::pi / period_; }

Vec3 PeriodicGrid::position(std::size_t cell) const {
  const auto [x, y, z] = dims_.coords(cell);
  return {x * spacing_[0], y * spacing_[1], z * spacing_[2]};
}

double PeriodicGrid::fluid_volume() const {
  const auto solid = obstacle_ ? obstacle_->solid_count() : 0;
  return static_cast<double>(spatial_size() - solid) * cell_volume();
}

double PeriodicGrid::annulus_volume() const {
  return obstacle_ ? static_cast<double>(obstacle_->annulus_count()) * cell_volume() : fluid_volume();
}

bool PeriodicGrid::same_shape(const PeriodicGrid& o) const {
  return nt_ == o.nt_ && dims_.nx == o.dims_.nx && dims_.ny == o.dims_.ny && dims_.nz == o.dims_.nz;
}

}  // namespace tpflow
