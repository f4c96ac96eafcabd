#include "tpflow/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace tpflow::fft {
namespace {

using Key = std::tuple<std::vector<std::pair<int, std::ptrdiff_t>>, std::vector<std::pair<int, std::ptrdiff_t>>, int>;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  fftw_plan get(std::span<const Dim> dims, std::span<const Dim> batch, Direction dir) {
    Key key;
    for (auto d : dims) std::get<0>(key).emplace_back(d.n, d.stride);
    for (auto d : batch) std::get<1>(key).emplace_back(d.n, d.stride);
    std::get<2>(key) = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::vector<fftw_iodim64> d, b;
    std::ptrdiff_t extent = 1;
    for (auto x : dims) {
      d.push_back({x.n, x.stride, x.stride});
      extent += (x.n - 1) * x.stride;
    }
    for (auto x : batch) {
      b.push_back({x.n, x.stride, x.stride});
      extent += (x.n - 1) * x.stride;
    }
    std::vector<cplx> scratch(static_cast<std::size_t>(extent));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_guru64_dft(static_cast<int>(d.size()), d.data(), static_cast<int>(b.size()), b.data(),
                                       buf, buf, std::get<2>(key), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("fftw planning failed");
    plans_.emplace(std::move(key), p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void transform(cplx* data, std::span<const Dim> dims, std::span<const Dim> batch, Direction dir) {
  if (dims.empty()) return;
  fftw_plan p = cache().get(dims, batch, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, buf, buf);
}

void transform3d(std::span<cplx> data, int nx, int ny, int nz, Direction dir) {
  const std::ptrdiff_t block = static_cast<std::ptrdiff_t>(nx) * ny * nz;
  const std::array<Dim, 3> dims{Dim{nz, static_cast<std::ptrdiff_t>(nx) * ny}, Dim{ny, nx}, Dim{nx, 1}};
  const auto count = static_cast<int>(static_cast<std::ptrdiff_t>(data.size()) / block);
  const std::array<Dim, 1> batch{Dim{count, block}};
  transform(data.data(), dims, std::span<const Dim>(batch.data(), count > 1 ? 1 : 0), dir);
}

}  // namespace tpflow::fft
