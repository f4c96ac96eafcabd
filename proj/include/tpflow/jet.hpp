#pragma once

#include <array>
#include <cstddef>

namespace tpflow {

// Truncated Taylor expansion in three variables up to total degree 3:
// J(x0 + d) = sum_{|a| <= 3} c_a d^a. Used to differentiate closed-form potentials exactly.
class Jet3 {
 public:
  static constexpr int kDegree = 3;
  static constexpr std::size_t kSize = 20;

  Jet3() { c_.fill(0.0); }
  static Jet3 constant(double v) {
    Jet3 j;
    j.c_[0] = v;
    return j;
  }
  // The coordinate x_axis expanded around x0.
  static Jet3 variable(int axis, double x0) {
    Jet3 j = constant(x0);
    j.c_[index(axis == 0, axis == 1, axis == 2)] = 1.0;
    return j;
  }

  static constexpr std::size_t index(int a, int b, int c) {
    // monomials ordered by degree, then lexicographically in (a, b)
    const int d = a + b + c;
    const std::size_t base[] = {0, 1, 4, 10};
    std::size_t off = 0;
    for (int aa = d; aa > a; --aa) off += static_cast<std::size_t>(d - aa + 1);
    return base[d] + off + static_cast<std::size_t>(d - a - b);
  }

  double value() const { return c_[0]; }
  double coeff(int a, int b, int c) const { return c_[index(a, b, c)]; }
  // Partial derivative d^a/dx^a d^b/dy^b d^c/dz^c at the expansion point.
  double derivative(int a, int b, int c) const {
    constexpr double fact[] = {1.0, 1.0, 2.0, 6.0};
    return fact[a] * fact[b] * fact[c] * coeff(a, b, c);
  }

  Jet3& operator+=(const Jet3& o) {
    for (std::size_t i = 0; i < kSize; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet3& operator-=(const Jet3& o) {
    for (std::size_t i = 0; i < kSize; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet3& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Jet3 operator+(Jet3 a, const Jet3& b) { return a += b; }
  friend Jet3 operator-(Jet3 a, const Jet3& b) { return a -= b; }
  friend Jet3 operator*(Jet3 a, double s) { return a *= s; }
  friend Jet3 operator*(double s, Jet3 a) { return a *= s; }
  friend Jet3 operator*(const Jet3& x, const Jet3& y) {
    Jet3 out;
    for (const auto& m : table().entries) out.c_[m.k] += x.c_[m.i] * y.c_[m.j];
    return out;
  }

  // f(J) from f and its first three derivatives at J's constant term.
  Jet3 compose(double f0, double f1, double f2, double f3) const {
    Jet3 d = *this;
    d.c_[0] = 0.0;
    const Jet3 d2 = d * d, d3 = d2 * d;
    return constant(f0) + f1 * d + (f2 / 2.0) * d2 + (f3 / 6.0) * d3;
  }

 private:
  struct Entry {
    std::size_t i, j, k;
  };
  struct Table {
    std::array<Entry, 84> entries{};
  };
  static const Table& table() {
    static const Table t = [] {
      Table tb;
      std::size_t n = 0;
      for (int a1 = 0; a1 <= 3; ++a1)
        for (int b1 = 0; a1 + b1 <= 3; ++b1)
          for (int c1 = 0; a1 + b1 + c1 <= 3; ++c1)
            for (int a2 = 0; a1 + b1 + c1 + a2 <= 3; ++a2)
              for (int b2 = 0; a1 + b1 + c1 + a2 + b2 <= 3; ++b2)
                for (int c2 = 0; a1 + b1 + c1 + a2 + b2 + c2 <= 3; ++c2)
                  tb.entries[n++] = {index(a1, b1, c1), index(a2, b2, c2), index(a1 + a2, b1 + b2, c1 + c2)};
      return tb;
    }();
    return t;
  }
  std::array<double, kSize> c_;
};

}  // namespace tpflow
