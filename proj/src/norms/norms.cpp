#include "tpflow/norms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tpflow/ops.hpp"

namespace tpflow {
namespace {

bool in_region(const PeriodicGrid& g, std::size_t cell, Region r) {
  return r == Region::fluid ? g.fluid(cell) : g.stencil_interior(cell);
}

void check_exponent(double e, const char* what) {
  if (!(e >= 1.0)) throw std::invalid_argument(std::string(what) + " must be at least 1");
}

// Per time slice: sum over region cells of |f|^p * dV, or the max of |f| when p is infinite.
std::vector<double> slice_sums(const std::vector<Field>& parts, double p, Region region) {
  if (parts.empty()) throw std::invalid_argument("norm of an empty field list");
  const auto& g = parts.front().grid();
  const std::size_t S = g.spatial_size();
  const double dV = g.cell_volume();
  const bool inf = p == kInfinity;
  std::vector<double> out(static_cast<std::size_t>(g.nt()), 0.0);
  for (int t = 0; t < g.nt(); ++t) {
    double acc = 0.0;
    for (std::size_t cell = 0; cell < S; ++cell) {
      if (!in_region(g, cell, region)) continue;
      double m2 = 0.0;
      for (const auto& f : parts)
        for (int c = 0; c < f.ncomp(); ++c) {
          const double v = f(t, c, cell);
          m2 += v * v;
        }
      if (inf)
        acc = std::max(acc, std::sqrt(m2));
      else
        acc += (p == 2.0 ? m2 : std::pow(m2, 0.5 * p)) * dV;
    }
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

}  // namespace

void NormSpec::validate() const {
  if (!(q > 1.0)) throw std::invalid_argument("norm exponent q must exceed 1");
  for (double e : {r, r_time, p_space})
    if (e != 0.0 && !(e > 1.0)) throw std::invalid_argument("norm exponents must exceed 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
}

double lq_norm_of_parts(const std::vector<Field>& parts, double q, Region region) {
  check_exponent(q, "q");
  const auto s = slice_sums(parts, q, region);
  if (q == kInfinity) return *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double v : s) total += v;
  total /= static_cast<double>(s.size());
  return std::pow(total, 1.0 / q);
}

double mixed_rp_norm_of_parts(const std::vector<Field>& parts, double r_time, double p_space, Region region) {
  check_exponent(r_time, "r_time");
  check_exponent(p_space, "p_space");
  if (r_time == p_space) return lq_norm_of_parts(parts, r_time, region);
  const auto s = slice_sums(parts, p_space, region);
  std::vector<double> slice_norm(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) slice_norm[t] = p_space == kInfinity ? s[t] : std::pow(s[t], 1.0 / p_space);
  if (r_time == kInfinity) return *std::max_element(slice_norm.begin(), slice_norm.end());
  double total = 0.0;
  for (double v : slice_norm) total += std::pow(v, r_time);
  total /= static_cast<double>(s.size());
  return std::pow(total, 1.0 / r_time);
}

double lq_spacetime_norm(const Field& f, double q, Region region) { return lq_norm_of_parts({f}, q, region); }

double mixed_rp_norm(const Field& f, double r_time, double p_space, Region region) {
  return mixed_rp_norm_of_parts({f}, r_time, p_space, region);
}

std::vector<Field> gradient_parts(const Field& u) {
  return {diff(u, Axis::x), diff(u, Axis::y), diff(u, Axis::z)};
}

std::vector<Field> hessian_parts(const Field& u) {
  std::vector<Field> out;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) out.push_back(second_diff(u, i, j));
  return out;
}

double gradient_norm(const Field& u, double q) { return lq_norm_of_parts(gradient_parts(u), q, Region::stencil); }
double hessian_norm(const Field& u, double q) { return lq_norm_of_parts(hessian_parts(u), q, Region::stencil); }

double sobolev_norm_12q(const Field& u, double q) {
  if (!(q > 1.0) || q == kInfinity) throw std::invalid_argument("sobolev_norm_12q needs q in (1, inf)");
  double s = std::pow(lq_spacetime_norm(u, q), q);
  s += std::pow(lq_spacetime_norm(diff(u, Axis::t), q), q);
  for (const auto& d : gradient_parts(u)) s += std::pow(lq_spacetime_norm(d, q, Region::stencil), q);
  for (const auto& d : hessian_parts(u)) s += std::pow(lq_spacetime_norm(d, q, Region::stencil), q);
  return std::pow(s, 1.0 / q);
}

double homogeneous_d1q_norm(const Field& p, double q) {
  if (p.ncomp() != 1) throw std::invalid_argument("homogeneous_d1q_norm needs a scalar field");
  if (!(q > 1.0) || q == kInfinity) throw std::invalid_argument("homogeneous_d1q_norm needs q in (1, inf)");
  const auto& g = p.grid();
  const double dV = g.cell_volume();
  double mean_abs = 0.0;
  for (int t = 0; t < g.nt(); ++t) {
    auto b = p.block(t, 0);
    double integral = 0.0;
    for (std::size_t cell = 0; cell < g.spatial_size(); ++cell)
      if (g.in_annulus(cell)) integral += b[cell] * dV;
    mean_abs += std::abs(integral);
  }
  mean_abs /= g.nt();
  return gradient_norm(p, q) + mean_abs;
}

double xoseen_norm(const Field& v, double q, double lambda) {
  if (!(q > 1.0 && q < 2.0)) throw std::invalid_argument("xoseen_norm needs q in (1, 2)");
  if (!(lambda > 0.0)) throw std::invalid_argument("xoseen_norm needs lambda > 0");
  const double r2 = 2.0 * q / (2.0 - q), r4 = 4.0 * q / (4.0 - q);
  return std::sqrt(lambda) * lq_spacetime_norm(v, r2) + std::pow(lambda, 0.25) * gradient_norm(v, r4) +
         lambda * lq_spacetime_norm(diff(v, Axis::x), q, Region::stencil) + hessian_norm(v, q);
}

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Shared three-case rule: bound = a/(b-c) when c < b, open infinity at c == b, closed infinity beyond.
ExponentBound three_case(double c, double b, double a) {
  if (near(c, b)) return {kInfinity, true};
  if (c < b) return {a / (b - c), false};
  return {kInfinity, false};
}

}  // namespace

AdmissibleExponents admissible_exponents(double alpha, double beta, double q, int n) {
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw std::invalid_argument("alpha must lie in [0, 2]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(q > 1.0) || q == kInfinity) throw std::invalid_argument("q must lie in (1, inf)");
  if (n < 2) throw std::invalid_argument("dimension must be at least 2");
  const double nd = n;
  return {three_case(alpha * q, 2.0, 2.0 * q), three_case((2.0 - alpha) * q, nd, nd * q),
          three_case(beta * q, 2.0, 2.0 * q), three_case((1.0 - beta) * q, nd, nd * q)};
}

bool within_bounds(const ExponentBound& rb, const ExponentBound& pb, double q, double r, double p) {
  auto ok = [q](const ExponentBound& b, double e) {
    if (e < q * (1.0 - 1e-12)) return false;
    if (b.infinite()) return !(b.open && e == kInfinity);
    return e <= b.value * (1.0 + 1e-12);
  };
  return ok(rb, r) && ok(pb, p);
}

ExponentMap exponent_map(Rational q) {
  if (q < Rational(6, 5) || q > Rational(4, 3)) throw std::invalid_argument("exponent_map needs q in [6/5, 4/3]");
  return {Rational(2) * q / (Rational(2) - q), Rational(4) * q / (Rational(4) - q), Rational(3) * q / (Rational(3) - q),
          (Rational(10) * q - Rational(12)) / q, (Rational(3) * q - Rational(3)) / q};
}

Rational Rational::parse(const std::string& s) {
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const auto v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return Rational(v);
    }
    const auto a = s.substr(0, slash), b = s.substr(slash + 1);
    const auto n = std::stoll(a, &used);
    if (used != a.size()) throw std::invalid_argument(s);
    const auto d = std::stoll(b, &used);
    if (used != b.size()) throw std::invalid_argument(s);
    return Rational(n, d);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("not a rational number: '" + s + "'");
  }
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void NormReport::add(std::string label, double value) {
  if (!std::isfinite(value) || value < 0.0) throw std::invalid_argument("norm '" + label + "' is not a finite nonnegative value");
  entries.emplace_back(std::move(label), value);
}

double NormReport::get(const std::string& label) const {
  for (const auto& [k, v] : entries)
    if (k == label) return v;
  throw std::out_of_range("no norm labelled '" + label + "'");
}

std::string NormReport::to_csv() const {
  std::ostringstream os;
  os << "label,value\n";
  for (const auto& [k, v] : entries) os << k << ',' << format_g17(v) << '\n';
  return os.str();
}

}  // namespace tpflow
