#pragma once

#include <cstddef>
#include <span>

#include "tpflow/grid.hpp"

// Second-order centered finite differences on one periodic spatial block,
// usable for real samples and complex temporal modes alike.
namespace tpflow::stencil {

namespace detail {
inline int wrap(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }
}  // namespace detail

// Centered first difference along `axis` (0=x, 1=y, 2=z).
template <class T>
void first(std::span<const T> in, std::span<T> out, const SpatialDims& d, int axis, double h) {
  const double s = 0.5 / h;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        std::size_t p, m;
        if (axis == 0) {
          p = d.index(z, y, detail::wrap(x + 1, d.nx));
          m = d.index(z, y, detail::wrap(x - 1, d.nx));
        } else if (axis == 1) {
          p = d.index(z, detail::wrap(y + 1, d.ny), x);
          m = d.index(z, detail::wrap(y - 1, d.ny), x);
        } else {
          p = d.index(detail::wrap(z + 1, d.nz), y, x);
          m = d.index(detail::wrap(z - 1, d.nz), y, x);
        }
        out[d.index(z, y, x)] = (in[p] - in[m]) * s;
      }
}

// Three-point second difference along `axis`.
template <class T>
void second(std::span<const T> in, std::span<T> out, const SpatialDims& d, int axis, double h) {
  const double s = 1.0 / (h * h);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        std::size_t p, m;
        if (axis == 0) {
          p = d.index(z, y, detail::wrap(x + 1, d.nx));
          m = d.index(z, y, detail::wrap(x - 1, d.nx));
        } else if (axis == 1) {
          p = d.index(z, detail::wrap(y + 1, d.ny), x);
          m = d.index(z, detail::wrap(y - 1, d.ny), x);
        } else {
          p = d.index(detail::wrap(z + 1, d.nz), y, x);
          m = d.index(detail::wrap(z - 1, d.nz), y, x);
        }
        const std::size_t c = d.index(z, y, x);
        out[c] = (in[p] - 2.0 * in[c] + in[m]) * s;
      }
}

// Seven-point Laplacian.
template <class T>
void laplacian(std::span<const T> in, std::span<T> out, const SpatialDims& d, const Vec3& h) {
  const double sx = 1.0 / (h[0] * h[0]), sy = 1.0 / (h[1] * h[1]), sz = 1.0 / (h[2] * h[2]);
  for (int z = 0; z < d.nz; ++z) {
    const int zp = detail::wrap(z + 1, d.nz), zm = detail::wrap(z - 1, d.nz);
    for (int y = 0; y < d.ny; ++y) {
      const int yp = detail::wrap(y + 1, d.ny), ym = detail::wrap(y - 1, d.ny);
      for (int x = 0; x < d.nx; ++x) {
        const int xp = detail::wrap(x + 1, d.nx), xm = detail::wrap(x - 1, d.nx);
        const std::size_t c = d.index(z, y, x);
        const T two = 2.0 * in[c];
        out[c] = (in[d.index(z, y, xp)] - two + in[d.index(z, y, xm)]) * sx +
                 (in[d.index(z, yp, x)] - two + in[d.index(z, ym, x)]) * sy +
                 (in[d.index(zp, y, x)] - two + in[d.index(zm, y, x)]) * sz;
      }
    }
  }
}

}  // namespace tpflow::stencil
