#pragma once

// Random finite trigonometric sums with closed-form derivatives, used as
// independent oracles for spectral and finite-difference operators.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "tpflow/field.hpp"

namespace testutil {

struct TrigTerm {
  std::array<int, 4> m;  // wavenumbers along t, x, y, z
  double a, b;           // a cos(phase) + b sin(phase)
};

class TrigPoly {
 public:
  TrigPoly() = default;
  TrigPoly(std::uint64_t seed, int mt, int ms, int terms) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dt(-mt, mt), ds(-ms, ms);
    std::normal_distribution<double> nd;
    for (int i = 0; i < terms; ++i) terms_.push_back({{dt(rng), ds(rng), ds(rng), ds(rng)}, nd(rng), nd(rng)});
  }
  void add(TrigTerm t) { terms_.push_back(t); }

  // Derivative orders d = {d_t, d_x, d_y, d_z}.
  double eval(double t, const tpflow::Vec3& x, double T, double L, std::array<int, 4> d = {0, 0, 0, 0}) const {
    const double w = 2.0 * std::numbers::pi / T, k = 2.0 * std::numbers::pi / L;
    double s = 0.0;
    for (const auto& tr : terms_) {
      const std::array<double, 4> f{w * tr.m[0], k * tr.m[1], k * tr.m[2], k * tr.m[3]};
      const double ph = f[0] * t + f[1] * x[0] + f[2] * x[1] + f[3] * x[2];
      double c = tr.a, sn = tr.b, scale = 1.0;
      int order = 0;
      for (int i = 0; i < 4; ++i) {
        scale *= std::pow(f[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(i)]);
        order += d[static_cast<std::size_t>(i)];
      }
      // d/dphase of (c cos + s sin) = (s cos - c sin)
      for (int o = 0; o < order; ++o) {
        const double nc = sn, ns = -c;
        c = nc;
        sn = ns;
      }
      s += scale * (c * std::cos(ph) + sn * std::sin(ph));
    }
    return s;
  }

  tpflow::Field sample(const tpflow::GridPtr& g, std::array<int, 4> d = {0, 0, 0, 0}) const {
    return tpflow::Field::generate(g, 1, [&](int t, int, std::size_t cell) {
      return eval(t * g->dt(), g->position(cell), g->period(), g->box_len(), d);
    });
  }

 private:
  std::vector<TrigTerm> terms_;
};

inline tpflow::Field sample_vector(const tpflow::GridPtr& g, const std::array<TrigPoly, 3>& p,
                                   std::array<int, 4> d = {0, 0, 0, 0}) {
  const std::array<tpflow::Field, 3> c{p[0].sample(g, d), p[1].sample(g, d), p[2].sample(g, d)};
  return tpflow::Field::stack(c);
}

inline double max_diff(const tpflow::Field& a, const tpflow::Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  return m;
}

inline tpflow::Field random_field(const tpflow::GridPtr& g, int ncomp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  return tpflow::Field::generate(g, ncomp, [&](int, int, std::size_t) { return nd(rng); });
}

}  // namespace testutil
