#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace tpflow {

struct GmresOptions {
  double tolerance = 1e-9;  // relative to ||b||
  int restart = 200;
  int max_restarts = 30;
};

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Restarted complex GMRES with modified Gram-Schmidt and Givens rotations. `x` holds the
// initial guess on entry and the solution on exit.
inline GmresResult gmres(const std::function<void(std::span<const std::complex<double>>, std::span<std::complex<double>>)>& apply,
                         std::span<const std::complex<double>> b, std::span<std::complex<double>> x, const GmresOptions& opt) {
  using T = std::complex<double>;
  using std::abs;
  using std::conj;
  using std::sqrt;
  const std::size_t n = b.size();
  auto dot = [n](const std::vector<T>& a, const std::vector<T>& c) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += conj(a[i]) * c[i];
    return s;
  };
  auto nrm = [&](const std::vector<T>& a) { return sqrt(std::real(dot(a, a))); };

  const std::vector<T> bv(b.begin(), b.end());
  const double bnorm = nrm(bv);
  GmresResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), T{});
    res.converged = true;
    return res;
  }
  const int m = std::max(1, std::min<int>(opt.restart, static_cast<int>(n)));
  std::vector<std::vector<T>> V(static_cast<std::size_t>(m) + 1, std::vector<T>(n));
  std::vector<std::vector<T>> H(static_cast<std::size_t>(m) + 1, std::vector<T>(static_cast<std::size_t>(m)));
  std::vector<T> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m) + 1);
  std::vector<T> w(n);

  auto residual = [&](std::vector<T>& r) {
    apply(std::span<const T>(x.data(), n), std::span<T>(w));
    for (std::size_t i = 0; i < n; ++i) r[i] = bv[i] - w[i];
  };

  for (int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
    residual(V[0]);
    double beta = nrm(V[0]);
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= opt.tolerance) {
      res.converged = true;
      return res;
    }
    if (cycle == opt.max_restarts) break;
    for (auto& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), T{});
    g[0] = beta;
    int j = 0;
    for (; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      apply(std::span<const T>(V[ju]), std::span<T>(w));
      ++res.iterations;
      for (int i = 0; i <= j; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const T h = dot(V[iu], w);
        H[iu][ju] = h;
        for (std::size_t k = 0; k < n; ++k) w[k] -= h * V[iu][k];
      }
      const double hn = nrm(w);
      H[ju + 1][ju] = hn;
      if (hn > 0.0)
        for (std::size_t k = 0; k < n; ++k) V[ju + 1][k] = w[k] / hn;
      for (int i = 0; i < j; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const T t = cs[iu] * H[iu][ju] + sn[iu] * H[iu + 1][ju];
        H[iu + 1][ju] = -conj(sn[iu]) * H[iu][ju] + conj(cs[iu]) * H[iu + 1][ju];
        H[iu][ju] = t;
      }
      const double a = abs(H[ju][ju]), bb = abs(H[ju + 1][ju]);
      const double r = std::hypot(a, bb);
      if (r == 0.0) {
        cs[ju] = T(1);
        sn[ju] = T{};
      } else {
        // [c s; -conj(s) conj(c)] maps (H_jj, H_j+1,j) to (r, 0)
        cs[ju] = conj(H[ju][ju]) / r;
        sn[ju] = conj(H[ju + 1][ju]) / r;
      }
      H[ju][ju] = cs[ju] * H[ju][ju] + sn[ju] * H[ju + 1][ju];
      H[ju + 1][ju] = T{};
      g[ju + 1] = -conj(sn[ju]) * g[ju];
      g[ju] = cs[ju] * g[ju];
      if (abs(g[ju + 1]) / bnorm <= 0.5 * opt.tolerance || hn == 0.0) {
        ++j;
        break;
      }
    }
    // back substitution on the j x j triangle
    std::vector<T> y(static_cast<std::size_t>(j));
    for (int i = j - 1; i >= 0; --i) {
      const auto iu = static_cast<std::size_t>(i);
      T s = g[iu];
      for (int k = i + 1; k < j; ++k) s -= H[iu][static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
      y[iu] = s / H[iu][iu];
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) x[k] += y[static_cast<std::size_t>(i)] * V[static_cast<std::size_t>(i)][k];
  }
  return res;
}

}  // namespace tpflow
