#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpflow {

using Vec3 = std::array<double, 3>;

enum class Backend { spectral, exterior };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SpatialDims {
  int nx = 0, ny = 0, nz = 0;
  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(x);
  }
  std::array<int, 3> coords(std::size_t cell) const;  // {x, y, z}
};

struct ObstacleGeometry {
  double radius_star = 0.0;
  double radius_zero = 0.0;
};

// Voxelized ball of radius R* centred on the grid point (nx/2, ny/2, nz/2).
class ObstacleMask {
 public:
  ObstacleMask(const SpatialDims& dims, const Vec3& spacing, ObstacleGeometry geom);

  const Vec3& center() const { return center_; }
  double radius_star() const { return geom_.radius_star; }
  double radius_zero() const { return geom_.radius_zero; }

  bool solid(std::size_t cell) const { return solid_[cell] != 0; }
  bool boundary(std::size_t cell) const { return boundary_slot_[cell] >= 0; }
  // Position of a boundary cell inside boundary_cells(), or -1.
  std::int64_t boundary_slot(std::size_t cell) const { return boundary_slot_[cell]; }
  bool in_annulus(std::size_t cell) const { return annulus_[cell] != 0; }

  std::span<const std::uint8_t> solid_flags() const { return solid_; }
  std::span<const std::size_t> boundary_cells() const { return boundary_; }
  std::span<const Vec3> normals() const { return normals_; }
  std::size_t solid_count() const { return solid_count_; }
  std::size_t annulus_count() const { return annulus_count_; }

 private:
  ObstacleGeometry geom_;
  Vec3 center_{};
  std::vector<std::uint8_t> solid_;
  std::vector<std::uint8_t> annulus_;
  std::vector<std::int64_t> boundary_slot_;
  std::vector<std::size_t> boundary_;
  std::vector<Vec3> normals_;
  std::size_t solid_count_ = 0;
  std::size_t annulus_count_ = 0;
};

class PeriodicGrid;
using GridPtr = std::shared_ptr<const PeriodicGrid>;

// Discrete stand-in for the time-periodic exterior domain: a T-periodic time axis
// times a periodic box of edge length L, optionally containing a voxelized ball.
class PeriodicGrid {
 public:
  static GridPtr make(double period, int nt, int nx, int ny, int nz, double box_len, Backend backend,
                      std::optional<ObstacleGeometry> obstacle = std::nullopt);

  double period() const { return period_; }
  int nt() const { return nt_; }
  int nx() const { return dims_.nx; }
  int ny() const { return dims_.ny; }
  int nz() const { return dims_.nz; }
  int n(int axis) const { return axis == 0 ? dims_.nx : axis == 1 ? dims_.ny : dims_.nz; }
  const SpatialDims& dims() const { return dims_; }
  double box_len() const { return box_len_; }
  Backend backend() const { return backend_; }

  std::size_t spatial_size() const { return dims_.count(); }
  double h(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  const Vec3& spacing() const { return spacing_; }
  double dt() const { return period_ / nt_; }
  double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }
  double omega() const;  // 2*pi/T

  Vec3 position(std::size_t cell) const;

  const ObstacleMask* obstacle() const { return obstacle_ ? &*obstacle_ : nullptr; }
  bool fluid(std::size_t cell) const { return !obstacle_ || !obstacle_->solid(cell); }
  // Fluid cells whose 27-point neighbourhood contains no solid cell: the cells on which
  // stencil-based derivatives only read fluid values.
  bool stencil_interior(std::size_t cell) const { return stencil_interior_.empty() || stencil_interior_[cell]; }
  // Fluid cells that are not boundary cells: where the momentum equation is enforced.
  bool interior_fluid(std::size_t cell) const {
    return !obstacle_ || (!obstacle_->solid(cell) && !obstacle_->boundary(cell));
  }
  bool in_annulus(std::size_t cell) const { return !obstacle_ || obstacle_->in_annulus(cell); }
  double fluid_volume() const;
  double annulus_volume() const;

  bool same_shape(const PeriodicGrid& o) const;

 private:
  PeriodicGrid() = default;
  double period_ = 1.0;
  int nt_ = 0;
  SpatialDims dims_;
  double box_len_ = 1.0;
  Vec3 spacing_{};
  Backend backend_ = Backend::spectral;
  std::optional<ObstacleMask> obstacle_;
  std::vector<std::uint8_t> stencil_interior_;
};

}  // namespace tpflow
