#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tpflow {

using cplx = std::complex<double>;

namespace fft {

enum class Direction { forward, inverse };

// One transform or batch dimension: length and element stride.
struct Dim {
  int n;
  std::ptrdiff_t stride;
};

// Unnormalized in-place complex DFT over `dims`, repeated over every index of `batch`.
// Forward uses exp(-i...), inverse exp(+i...). Plans are cached and thread safe.
void transform(cplx* data, std::span<const Dim> dims, std::span<const Dim> batch, Direction dir);

// 3D transform of `count` contiguous nz*ny*nx blocks.
void transform3d(std::span<cplx> data, int nx, int ny, int nz, Direction dir);

// Signed integer wavenumber of FFT slot j on a length-n axis, in [-n/2, n/2-1].
inline int wavenumber(int j, int n) { return j < n / 2 ? j : j - n; }

}  // namespace fft
}  // namespace tpflow
