#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"
#include "tpflow/verify.hpp"

namespace tpflow {

namespace {

constexpr double kPi = std::numbers::pi;

// Fills min/max/median/dispersion from per-row ratios.
void summarize(AuditReport& r, std::vector<double> ratios) {
  if (ratios.empty()) return;
  std::sort(ratios.begin(), ratios.end());
  r.ratio_min = ratios.front();
  r.ratio_max = ratios.back();
  const std::size_t n = ratios.size();
  r.ratio_median = n % 2 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  r.dispersion = r.ratio_min > 0.0 ? r.ratio_max / r.ratio_min : (r.ratio_max > 0.0 ? kInfinity : 1.0);
}

void mark_rows(AuditReport& r) {
  r.violations = 0;
  for (auto& row : r.rows) {
    row.fitted_constant = r.constant;
    row.pass = row.left <= r.constant * row.right;
    if (!row.pass) ++r.violations;
  }
}

double ratio(double left, double right) { return right > 0.0 ? left / right : (left > 0.0 ? kInfinity : 0.0); }

// Spatial L^s norm on one time slice over the selected cells; vector parts combine into a Euclidean magnitude.
double slice_norm(const std::vector<Field>& parts, int t, double s, const std::function<bool(std::size_t)>& keep) {
  const auto& g = parts.front().grid();
  double acc = 0.0;
  for (std::size_t cell = 0; cell < g.spatial_size(); ++cell) {
    if (!keep(cell)) continue;
    double m2 = 0.0;
    for (const auto& f : parts)
      for (int c = 0; c < f.ncomp(); ++c) {
        const double v = f(t, c, cell);
        m2 += v * v;
      }
    acc += std::pow(m2, 0.5 * s);
  }
  return std::pow(acc * g.cell_volume(), 1.0 / s);
}

double distance_to_center(const PeriodicGrid& g, std::size_t cell) {
  const auto x = g.position(cell);
  const Vec3 c = g.obstacle() ? g.obstacle()->center() : Vec3{g.nx() / 2 * g.h(0), g.ny() / 2 * g.h(1), g.nz() / 2 * g.h(2)};
  double r2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
  return std::sqrt(r2);
}

double target_exponent(const ExponentBound& b, double q) {
  if (b.infinite()) return b.open ? 6.0 * q : kInfinity;
  return b.open ? 0.9 * b.value : b.value;
}

}  // namespace

double AuditReport::get(const std::string& label) const {
  for (const auto& [k, v] : extra)
    if (k == label) return v;
  throw std::out_of_range("audit report has no entry '" + label + "'");
}

std::string AuditReport::to_csv() const {
  std::ostringstream os;
  os << "label,left,right,fitted_constant,pass\n";
  for (const auto& r : rows)
    os << r.label << ',' << format_g17(r.left) << ',' << format_g17(r.right) << ',' << format_g17(r.fitted_constant) << ','
       << (r.pass ? 1 : 0) << '\n';
  os << "constant," << format_g17(constant) << '\n';
  os << "ratio_min," << format_g17(ratio_min) << '\n';
  os << "ratio_max," << format_g17(ratio_max) << '\n';
  os << "ratio_median," << format_g17(ratio_median) << '\n';
  os << "dispersion," << format_g17(dispersion) << '\n';
  os << "violations," << violations << '\n';
  for (const auto& [k, v] : extra) os << k << ',' << format_g17(v) << '\n';
  os << "pass," << (pass ? 1 : 0) << '\n';
  return os.str();
}

AuditReport audit_linear_estimate(const GridPtr& grid, const OseenParams& params, int ensemble, double q, std::uint64_t seed) {
  if (ensemble < 1) throw std::invalid_argument("ensemble must be nonempty");
  if (!(q > 1.0) || q == kInfinity) throw std::invalid_argument("q must lie in (1, inf)");
  params.validate(grid->nt());
  AuditReport r;
  r.name = "linear-estimate";
  const int bt = std::max(1, std::min(grid->nt() / 4, grid->nt() / 2 - 1));
  const int bx = default_band(std::min({grid->nx(), grid->ny(), grid->nz()}));
  std::vector<double> ratios;
  for (int i = 0; i < ensemble; ++i) {
    const Field F = zero_solid(project_oscillatory(random_band_limited(grid, 3, seed + static_cast<std::uint64_t>(i), bt, bx)));
    const auto sol = grid->obstacle() ? solve_exterior_tp_oseen(F, BoundaryData::zero(grid), params)
                                      : solve_wholespace_tp_oseen(F, params);
    const double left = sobolev_norm_12q(sol.u, q) + gradient_norm(sol.p, q);
    const double right = lq_spacetime_norm(F, q);
    r.rows.push_back({"sample_" + std::to_string(i), left, right, 0.0, true});
    ratios.push_back(ratio(left, right));
  }
  summarize(r, ratios);
  r.constant = r.ratio_max;
  mark_rows(r);
  r.extra.push_back({"q", q});
  r.extra.push_back({"lambda", params.lambda});
  r.pass = r.dispersion <= 20.0;
  return r;
}

AuditReport audit_modewise(const GridPtr& grid, const OseenParams& params, int kmax, std::uint64_t seed) {
  if (kmax < 1) throw std::invalid_argument("k_max must be at least 1");
  if (kmax > grid->nt() / 2 - 1) throw std::invalid_argument("k_max exceeds the retained temporal modes");
  params.validate(grid->nt());
  AuditReport r;
  r.name = "modewise";
  const std::size_t N = grid->spatial_size();
  const int bx = default_band(std::min({grid->nx(), grid->ny(), grid->nz()}));
  const Field shape = zero_solid(random_band_limited(grid, 3, seed, 0, bx));
  ModeField F(grid, 3);
  double n2 = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < N; ++i) {
      F.comp(c)[i] = shape(0, c, i);
      if (grid->fluid(i)) n2 += shape(0, c, i) * shape(0, c, i) * grid->cell_volume();
    }
  for (auto& v : F.data) v /= std::sqrt(n2);

  std::vector<double> ck(static_cast<std::size_t>(kmax));
  if (grid->obstacle()) {
    const std::vector<cplx> g0(3 * grid->obstacle()->boundary_cells().size());
    for (int k = 1; k <= kmax; ++k) {
      const auto sol = solve_mode_exterior(F, g0, k, params);
      ck[static_cast<std::size_t>(k - 1)] = mode_constant(F, sol.u, sol.p, k);
    }
  } else {
    for (int k = 1; k <= kmax; ++k) {
      const Field Fk = Field::generate(grid, 3, [&](int t, int c, std::size_t i) {
        return 2.0 * std::cos(2.0 * kPi * k * t / grid->nt()) * F.comp(c)[i].real();
      });
      const auto sol = solve_wholespace_tp_oseen(Fk, params);
      const auto um = time_modes(sol.u, k), pm = time_modes(sol.p, k), fm = time_modes(Fk, k);
      ck[static_cast<std::size_t>(k - 1)] = mode_constant(fm[static_cast<std::size_t>(k)], um[static_cast<std::size_t>(k)],
                                                          pm[static_cast<std::size_t>(k)], k);
    }
  }
  for (int k = 1; k <= kmax; ++k) r.rows.push_back({"k=" + std::to_string(k), ck[static_cast<std::size_t>(k - 1)], 1.0, 0.0, true});
  summarize(r, ck);
  r.constant = r.ratio_max;
  mark_rows(r);
  r.extra.push_back({"lambda", params.lambda});
  r.pass = r.dispersion <= 4.0;
  return r;
}

EmbeddingTargets embedding_targets(double alpha, double beta, double q) {
  const auto e = admissible_exponents(alpha, beta, q);
  EmbeddingTargets t{target_exponent(e.r0, q), target_exponent(e.p0, q), target_exponent(e.r1, q), target_exponent(e.p1, q)};
  if (!within_bounds(e.r0, e.p0, q, t.r0, t.p0) || !within_bounds(e.r1, e.p1, q, t.r1, t.p1))
    throw std::invalid_argument("no admissible target exponents for this (alpha, beta, q)");
  return t;
}

AuditReport audit_embedding(const GridPtr& grid, double q, double alpha, double beta, std::uint64_t seed, int calibration,
                            int fresh) {
  if (calibration < 1 || fresh < 0) throw std::invalid_argument("invalid ensemble sizes");
  const auto t = embedding_targets(alpha, beta, q);
  AuditReport r;
  r.name = "embedding";
  const int bt = std::max(1, grid->nt() / 4);
  const int bx = default_band(std::min({grid->nx(), grid->ny(), grid->nz()}));
  auto sides = [&](std::uint64_t s) {
    const Field u = zero_solid(random_band_limited(grid, 3, s, bt, bx));
    const double left = mixed_rp_norm(u, t.r0, t.p0) + mixed_rp_norm_of_parts(gradient_parts(u), t.r1, t.p1, Region::stencil);
    return std::pair{left, sobolev_norm_12q(u, q)};
  };
  std::vector<double> calib;
  for (int i = 0; i < calibration; ++i) {
    const auto [l, rr] = sides(seed + static_cast<std::uint64_t>(i));
    r.rows.push_back({"calibrate_" + std::to_string(i), l, rr, 0.0, true});
    calib.push_back(ratio(l, rr));
  }
  r.constant = 1.2 * *std::max_element(calib.begin(), calib.end());
  std::vector<double> all = calib;
  for (int i = 0; i < fresh; ++i) {
    const auto [l, rr] = sides(seed + 1000003u + static_cast<std::uint64_t>(i));
    r.rows.push_back({"check_" + std::to_string(i), l, rr, 0.0, true});
    all.push_back(ratio(l, rr));
  }
  summarize(r, all);
  mark_rows(r);
  r.extra.push_back({"alpha", alpha});
  r.extra.push_back({"beta", beta});
  r.extra.push_back({"q", q});
  r.extra.push_back({"r0", t.r0});
  r.extra.push_back({"p0", t.p0});
  r.extra.push_back({"r1", t.r1});
  r.extra.push_back({"p1", t.p1});
  r.pass = r.violations == 0;
  return r;
}

AuditReport audit_pressure_local(std::span<const SolvedSample> samples, double s) {
  if (!(s > 1.0) || s == kInfinity) throw std::invalid_argument("s must lie in (1, inf)");
  AuditReport r;
  r.name = "pressure-local";
  std::vector<double> c1, c2;
  std::vector<AuditRow> rows2;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& smp = samples[n];
    const auto& g = smp.u.grid();
    const auto* ob = g.obstacle();
    if (!ob) throw std::invalid_argument("the pressure audit needs an obstacle grid");
    const double rho = ob->radius_zero();
    auto fluid = [&](std::size_t c) { return g.fluid(c); };
    auto annulus = [&](std::size_t c) { return g.in_annulus(c) && g.fluid(c); };
    auto annulus_inner = [&](std::size_t c) { return g.in_annulus(c) && g.stencil_interior(c); };
    auto outer = [&](std::size_t c) { return g.stencil_interior(c) && distance_to_center(g, c) > rho; };
    const auto gu = gradient_parts(smp.u), hu = hessian_parts(smp.u), gp = gradient_parts(smp.p);
    double best1 = 0.0, best2 = 0.0;
    AuditRow row1{"est1_" + std::to_string(n), 0.0, 0.0, 0.0, true}, row2{"est2_" + std::to_string(n), 0.0, 0.0, 0.0, true};
    for (int t = 0; t < g.nt(); ++t) {
      const double Fs = slice_norm({smp.F}, t, s, fluid);
      const double du = slice_norm(gu, t, s, annulus_inner);
      const double d2u = slice_norm(hu, t, s, annulus_inner);
      const double du1 = std::pow(std::pow(du, s) + std::pow(d2u, s), 1.0 / s);
      const double l1 = slice_norm({smp.p}, t, 1.5 * s, annulus);
      const double r1 = Fs + du + std::pow(du, (s - 1.0) / s) * std::pow(du1, 1.0 / s);
      const double l2 = slice_norm(gp, t, s, outer);
      const double r2 = Fs + slice_norm({smp.p}, t, s, annulus);
      if (r1 > 0.0 && l1 / r1 >= best1) best1 = l1 / r1, row1.left = l1, row1.right = r1;
      if (r2 > 0.0 && l2 / r2 >= best2) best2 = l2 / r2, row2.left = l2, row2.right = r2;
    }
    r.rows.push_back(row1);
    rows2.push_back(row2);
    c1.push_back(best1);
    c2.push_back(best2);
  }
  AuditReport second;
  summarize(second, c2);
  summarize(r, c1);
  r.constant = std::max(r.ratio_max, second.ratio_max);
  r.rows.insert(r.rows.end(), rows2.begin(), rows2.end());
  mark_rows(r);
  r.extra.push_back({"s", s});
  r.extra.push_back({"est1_constant", r.ratio_max});
  r.extra.push_back({"est1_dispersion", r.dispersion});
  r.extra.push_back({"est2_constant", second.ratio_max});
  r.extra.push_back({"est2_dispersion", second.dispersion});
  r.pass = samples.empty() || (r.dispersion <= 20.0 && second.dispersion <= 20.0);
  return r;
}

AuditReport audit_pressure_ensemble(const GridPtr& grid, const OseenParams& params, int ensemble, double s, std::uint64_t seed) {
  if (!grid->obstacle()) throw std::invalid_argument("the pressure audit needs an obstacle grid");
  const int bt = std::max(1, std::min(grid->nt() / 4, grid->nt() / 2 - 1));
  const int bx = default_band(std::min({grid->nx(), grid->ny(), grid->nz()}));
  std::vector<SolvedSample> samples;
  for (int i = 0; i < ensemble; ++i) {
    const Field F = zero_solid(filter_time_nyquist(random_band_limited(grid, 3, seed + static_cast<std::uint64_t>(i), bt, bx)));
    auto sol = solve_exterior_tp_oseen(F, BoundaryData::zero(grid), params);
    samples.push_back({std::move(sol.u), std::move(sol.p), F});
  }
  return audit_pressure_local(samples, s);
}

std::pair<double, double> nonlinear_term_sides(const Field& v, double q, double lambda) {
  if (!(q >= 1.2 - 1e-12 && q <= 4.0 / 3.0 + 1e-12)) throw std::invalid_argument("q must lie in [6/5, 4/3]");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double left = lq_spacetime_norm(advect(v, v), q, Region::stencil);
  const double x = xoseen_norm(v, q, lambda);
  return {left, std::pow(lambda, -(3.0 * q - 3.0) / q) * x * x};
}

AuditReport audit_nonlinear_term(std::span<const Field> calibration, std::span<const Field> fresh, double q,
                                 std::span<const double> lambdas) {
  AuditReport r;
  r.name = "nonlinear-term";
  std::vector<double> calib, all;
  for (std::size_t i = 0; i < calibration.size(); ++i)
    for (double lam : lambdas) {
      const auto [l, rr] = nonlinear_term_sides(calibration[i], q, lam);
      r.rows.push_back({"calibrate_" + std::to_string(i) + "_lambda=" + format_g17(lam), l, rr, 0.0, true});
      calib.push_back(ratio(l, rr));
    }
  r.constant = calib.empty() ? 0.0 : 1.2 * *std::max_element(calib.begin(), calib.end());
  all = calib;
  for (std::size_t i = 0; i < fresh.size(); ++i)
    for (double lam : lambdas) {
      const auto [l, rr] = nonlinear_term_sides(fresh[i], q, lam);
      r.rows.push_back({"check_" + std::to_string(i) + "_lambda=" + format_g17(lam), l, rr, 0.0, true});
      all.push_back(ratio(l, rr));
    }
  summarize(r, all);
  mark_rows(r);
  double scale_err = 0.0;
  if (!calibration.empty() && !lambdas.empty()) {
    const auto [l1, r1] = nonlinear_term_sides(calibration[0], q, lambdas[0]);
    const auto [l3, r3] = nonlinear_term_sides(3.0 * calibration[0], q, lambdas[0]);
    const double a = ratio(l1, r1), b = ratio(l3, r3);
    scale_err = a > 0.0 ? std::abs(b - a) / a : std::abs(b - a);
  }
  r.extra.push_back({"q", q});
  r.extra.push_back({"lambda_exponent", (3.0 * q - 3.0) / q});
  r.extra.push_back({"scale_invariance_error", scale_err});
  r.pass = r.violations == 0 && scale_err < 1e-12;
  return r;
}

AuditReport audit_nonlinear_term_ensemble(const GridPtr& grid, double q, std::span<const double> lambdas, int ensemble,
                                          std::uint64_t seed) {
  // products of band n/6 fields stay inside the dealiasing band
  const int bx = std::max(1, std::min({grid->nx(), grid->ny(), grid->nz()}) / 6);
  std::vector<Field> calib, fresh;
  for (int i = 0; i < ensemble; ++i) {
    calib.push_back(random_solenoidal(grid, seed + static_cast<std::uint64_t>(i), 0, bx));
    fresh.push_back(random_solenoidal(grid, seed + 1000003u + static_cast<std::uint64_t>(i), 0, bx));
  }
  return audit_nonlinear_term(calib, fresh, q, lambdas);
}

WakeReport wake_diagnostic(const Field& u, double r) {
  const auto& g = u.grid();
  const double hmax = std::max({g.h(0), g.h(1), g.h(2)});
  const double rmin = g.obstacle() ? g.obstacle()->radius_zero() : 0.0;
  if (!(r >= rmin && r <= 0.5 * g.box_len() - 2.0 * hmax))
    throw std::invalid_argument("wake radius must lie between R0 and the box half-width minus two cells");
  const Vec3 c = g.obstacle() ? g.obstacle()->center() : Vec3{g.nx() / 2 * g.h(0), g.ny() / 2 * g.h(1), g.nz() / 2 * g.h(2)};
  auto magnitude = [&](Vec3 x) {
    int i0[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
      const double s = x[static_cast<std::size_t>(a)] / g.h(a);
      const double f = std::floor(s);
      i0[a] = static_cast<int>(f);
      w[a] = s - f;
    }
    Vec3 v{};
    for (int dz = 0; dz < 2; ++dz)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const double wt = (dx ? w[0] : 1 - w[0]) * (dy ? w[1] : 1 - w[1]) * (dz ? w[2] : 1 - w[2]);
          auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
          const std::size_t cell =
              g.dims().index(wrap(i0[2] + dz, g.nz()), wrap(i0[1] + dy, g.ny()), wrap(i0[0] + dx, g.nx()));
          for (int k = 0; k < 3; ++k) v[static_cast<std::size_t>(k)] += wt * u(0, k, cell);
        }
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  };
  WakeReport out;
  out.radius = r;
  out.downstream = magnitude({c[0] + r, c[1], c[2]});
  out.upstream = magnitude({c[0] - r, c[1], c[2]});
  out.lateral = 0.5 * (magnitude({c[0], c[1] + r, c[2]}) + magnitude({c[0], c[1] - r, c[2]}));
  out.ratio = ratio(out.downstream, out.upstream);
  return out;
}

WakeReport run_wake(const GridPtr& grid, double nu, double lambda, double r) {
  if (!grid->obstacle()) throw std::invalid_argument("the wake run needs an obstacle grid");
  if (lambda > 0.0) {
    const auto params = OseenParams::constant(nu, lambda, grid->nt(), std::max(1.0, lambda));
    const auto lift = solve_lift_steady(BoundaryData::towed(grid, params).steady_part(), params);
    return wake_diagnostic(lift.u, r);
  }
  // drift-free control: steady Stokes problem in the box with the body moving at unit speed
  const auto bc = BoundaryData::from_function(grid, [](int, const Vec3&, const Vec3&) { return Vec3{-1.0, 0.0, 0.0}; });
  const ExteriorModeSolver solver(grid, cplx(0.0), nu, 0.0);
  const auto sol = solver.solve(ModeField(grid, 3), bc.time_modes(0)[0]);
  const std::array<ModeField, 1> um{sol.u};
  return wake_diagnostic(from_time_modes(grid, 3, um), r);
}

Vec3 oseen_tensor_e1(double nu, double lambda, const Vec3& x) {
  if (!(nu > 0.0 && lambda > 0.0)) throw std::invalid_argument("the Oseen tensor needs nu > 0 and lambda > 0");
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  if (r == 0.0) throw std::invalid_argument("the Oseen tensor is singular at the origin");
  const double k = lambda / (2.0 * nu);
  const double s = k * (r - x[0]);
  // e(s) = (1 - exp(-s))/s and its derivative
  double e, de;
  if (s < 1e-4) {
    e = 1.0 - s / 2.0 + s * s / 6.0 - s * s * s / 24.0;
    de = -0.5 + s / 3.0 - s * s / 8.0;
  } else {
    const double em = std::exp(-s);
    e = (1.0 - em) / s;
    de = (s * em - (1.0 - em)) / (s * s);
  }
  const double G = std::exp(-s) / (4.0 * kPi * nu * r);
  const double ds1 = k * (x[0] / r - 1.0);
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double dsi = k * (x[iu] / r - (i == 0 ? 1.0 : 0.0));
    const double dsi1 = k * ((i == 0 ? 1.0 / r : 0.0) - x[iu] * x[0] / (r * r * r));
    const double phi_i1 = -(de * dsi * ds1 + e * dsi1) / (4.0 * kPi * lambda);
    out[iu] = (i == 0 ? G : 0.0) + phi_i1;
  }
  return out;
}

double oseen_axis_ratio(double nu, double lambda, double r) {
  auto mag = [](const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); };
  return mag(oseen_tensor_e1(nu, lambda, {r, 0.0, 0.0})) / mag(oseen_tensor_e1(nu, lambda, {-r, 0.0, 0.0}));
}

}  // namespace tpflow
