#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tpflow/jet.hpp"
#include "tpflow/ops.hpp"
#include "tpflow/verify.hpp"

namespace tpflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// C^3 smoothstep 35 s^4 - 84 s^5 + 70 s^6 - 20 s^7 and its first three derivatives
std::array<double, 4> smoothstep(double s) {
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  return {s4 * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s3), 140.0 * s3 * (1.0 - 3.0 * s + 3.0 * s2 - s3),
          420.0 * s2 * (1.0 - 4.0 * s + 5.0 * s2 - 2.0 * s3), 840.0 * s * (1.0 - 6.0 * s + 10.0 * s2 - 5.0 * s3)};
}

Jet3 cutoff_jet(const ManufacturedPotential::Cutoff& c, const Vec3& x) {
  Jet3 r2;
  for (int i = 0; i < 3; ++i) {
    const Jet3 d = Jet3::variable(i, x[static_cast<std::size_t>(i)] - c.center[static_cast<std::size_t>(i)]);
    r2 += d * d;
  }
  const double a2 = c.r_in * c.r_in, b2 = c.r_out * c.r_out;
  const Jet3 tau = (r2 - Jet3::constant(a2)) * (1.0 / (b2 - a2));
  if (tau.value() <= 0.0) return Jet3{};
  if (tau.value() >= 1.0) return Jet3::constant(1.0);
  const auto f = smoothstep(tau.value());
  return tau.compose(f[0], f[1], f[2], f[3]);
}

// chi cos(phase_x) and chi sin(phase_x) for one term
struct TermJets {
  Jet3 c, s;
};

TermJets term_jets(const TrigTerm& term, const Jet3& chi, const Vec3& x, double k) {
  Jet3 ph;
  double ph0 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double w = k * term.m[static_cast<std::size_t>(i) + 1];
    ph0 += w * x[static_cast<std::size_t>(i)];
    ph += w * Jet3::variable(i, 0.0);
  }
  ph += Jet3::constant(ph0);
  const double c = std::cos(ph0), s = std::sin(ph0);
  return {chi * ph.compose(c, -s, -c, s), chi * ph.compose(s, c, -s, -c)};
}

// a cos(wt + phx) + b sin(wt + phx) = cos(wt)(a C + b S) + sin(wt)(b C - a S); returns value and d/dt.
void combine(const TrigTerm& term, const TermJets& j, double t, double omega, Jet3& val, Jet3& dt) {
  const double w = omega * term.m[0];
  const double ct = std::cos(w * t), st = std::sin(w * t);
  const Jet3 A = term.a * j.c + term.b * j.s;
  const Jet3 B = term.b * j.c - term.a * j.s;
  val += ct * A + st * B;
  dt += (-w * st) * A + (w * ct) * B;
}

double D(const Jet3& j, std::array<int, 3> a) { return j.derivative(a[0], a[1], a[2]); }

std::array<int, 3> unit(int i) {
  std::array<int, 3> e{};
  e[static_cast<std::size_t>(i)] = 1;
  return e;
}
std::array<int, 3> plus(std::array<int, 3> a, int i, int n = 1) {
  a[static_cast<std::size_t>(i)] += n;
  return a;
}

std::vector<TrigTerm> draw_terms(std::mt19937_64& rng, int count, int band_t, int band, double amp, bool nonzero_space) {
  std::uniform_int_distribution<int> dt(-band_t, band_t), ds(-band, band);
  std::normal_distribution<double> nd;
  std::vector<TrigTerm> out;
  while (static_cast<int>(out.size()) < count) {
    TrigTerm t;
    t.m = {dt(rng), ds(rng), ds(rng), ds(rng)};
    t.a = amp * nd(rng);
    t.b = amp * nd(rng);
    if (nonzero_space && t.m[1] == 0 && t.m[2] == 0 && t.m[3] == 0) continue;
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::wholespace_linear: return "wholespace-linear";
    case CaseKind::exterior_linear: return "exterior-linear";
    case CaseKind::nonlinear: return "nonlinear";
  }
  return "?";
}

CaseKind case_kind_from_string(const std::string& s) {
  if (s == "wholespace-linear") return CaseKind::wholespace_linear;
  if (s == "exterior-linear") return CaseKind::exterior_linear;
  if (s == "nonlinear") return CaseKind::nonlinear;
  throw std::invalid_argument("unknown manufactured case kind '" + s + "'");
}

ManufacturedPotential::ManufacturedPotential(std::array<std::vector<TrigTerm>, 3> psi, std::vector<TrigTerm> pressure,
                                             double period, double box_len, std::optional<Cutoff> cutoff)
    : psi_(std::move(psi)), pressure_(std::move(pressure)), period_(period), box_len_(box_len), cutoff_(cutoff) {
  if (cutoff_ && !(cutoff_->r_in >= 0.0 && cutoff_->r_out > cutoff_->r_in))
    throw std::invalid_argument("cut-off radii must satisfy 0 <= r_in < r_out");
}

ManufacturedPotential::Sample ManufacturedPotential::eval(double t, const Vec3& x) const {
  const std::array<double, 1> ts{t};
  return eval_times(x, ts)[0];
}

std::vector<ManufacturedPotential::Sample> ManufacturedPotential::eval_times(const Vec3& x, std::span<const double> times) const {
  const double k = kTwoPi / box_len_, omega = kTwoPi / period_;
  const Jet3 chi = cutoff_ ? cutoff_jet(*cutoff_, x) : Jet3::constant(1.0);
  std::array<std::vector<TermJets>, 3> pj;
  for (std::size_t c = 0; c < 3; ++c)
    for (const auto& term : psi_[c]) pj[c].push_back(term_jets(term, chi, x, k));
  std::vector<TermJets> qj;
  for (const auto& term : pressure_) qj.push_back(term_jets(term, chi, x, k));

  std::vector<Sample> out;
  out.reserve(times.size());
  for (const double t : times) {
    std::array<Jet3, 3> psi, psi_t;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < psi_[c].size(); ++i) combine(psi_[c][i], pj[c][i], t, omega, psi[c], psi_t[c]);
    Jet3 p, p_t;
    for (std::size_t i = 0; i < pressure_.size(); ++i) combine(pressure_[i], qj[i], t, omega, p, p_t);

    Sample s;
    for (int c = 0; c < 3; ++c) {
      const int a = (c + 1) % 3, b = (c + 2) % 3;
      const auto& pa = psi[static_cast<std::size_t>(a)];
      const auto& pb = psi[static_cast<std::size_t>(b)];
      const auto cu = static_cast<std::size_t>(c);
      s.u[cu] = D(pb, unit(a)) - D(pa, unit(b));
      s.u_t[cu] = D(psi_t[static_cast<std::size_t>(b)], unit(a)) - D(psi_t[static_cast<std::size_t>(a)], unit(b));
      for (int j = 0; j < 3; ++j) {
        s.grad[static_cast<std::size_t>(j)][cu] = D(pb, plus(unit(a), j)) - D(pa, plus(unit(b), j));
        s.lap_u[cu] += D(pb, plus(unit(a), j, 2)) - D(pa, plus(unit(b), j, 2));
      }
    }
    s.p = p.value();
    for (int j = 0; j < 3; ++j) s.grad_p[static_cast<std::size_t>(j)] = D(p, unit(j));
    out.push_back(s);
  }
  return out;
}

ManufacturedCase manufactured_case(CaseKind kind, const GridPtr& grid, const OseenParams& params, std::uint64_t seed,
                                   double amplitude, const ManufacturedOptions& opt) {
  if (!(amplitude >= 0.0)) throw std::invalid_argument("amplitude must be nonnegative");
  params.validate(grid->nt());
  const auto* ob = grid->obstacle();
  if (kind == CaseKind::wholespace_linear && (ob || grid->backend() != Backend::spectral))
    throw std::invalid_argument("wholespace-linear cases need the spectral backend without obstacle");
  if (kind == CaseKind::exterior_linear && !ob) throw std::invalid_argument("exterior-linear cases need an obstacle grid");
  if (opt.band < 1 || opt.band_t < 0 || opt.terms < 1) throw std::invalid_argument("invalid manufactured-case band");
  if (2 * opt.band_t >= grid->nt()) throw std::invalid_argument("temporal band reaches the Nyquist mode");
  if (2 * opt.band >= std::min({grid->nx(), grid->ny(), grid->nz()})) throw std::invalid_argument("spatial band reaches the Nyquist mode");

  std::mt19937_64 rng(seed);
  std::array<std::vector<TrigTerm>, 3> psi;
  for (auto& c : psi) c = draw_terms(rng, opt.terms, opt.band_t, opt.band, amplitude, false);
  auto pres = draw_terms(rng, opt.terms, opt.band_t, opt.band, amplitude, true);

  std::optional<ManufacturedPotential::Cutoff> cut;
  if (ob) {
    const double hmax = std::max({grid->h(0), grid->h(1), grid->h(2)});
    ManufacturedPotential::Cutoff c;
    c.center = ob->center();
    c.r_in = opt.r_in > 0.0 ? opt.r_in : ob->radius_star() + 3.0 * hmax;
    c.r_out = opt.r_out > 0.0 ? opt.r_out : 0.48 * grid->box_len();
    if (c.r_out > 0.5 * grid->box_len()) throw std::invalid_argument("cut-off must lie inside the box");
    cut = c;
  }
  const ManufacturedPotential pot(std::move(psi), std::move(pres), grid->period(), grid->box_len(), cut);

  const int nt = grid->nt();
  const std::size_t N = grid->spatial_size();
  std::vector<double> u(static_cast<std::size_t>(nt) * 3 * N), F(u.size()), p(static_cast<std::size_t>(nt) * N);
  const bool nonlinear = kind == CaseKind::nonlinear;
  std::vector<double> times(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) times[static_cast<std::size_t>(t)] = t * grid->dt();
  for (std::size_t cell = 0; cell < N; ++cell) {
    const auto samples = pot.eval_times(grid->position(cell), times);
    for (int t = 0; t < nt; ++t) {
      const auto& s = samples[static_cast<std::size_t>(t)];
      const auto tu = static_cast<std::size_t>(t);
      p[tu * N + cell] = s.p;
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t i = (tu * 3 + c) * N + cell;
        u[i] = s.u[c];
        double f = s.u_t[c] - params.nu * s.lap_u[c] + s.grad_p[c];
        if (nonlinear) {
          const double z = params.zeta[tu];
          f += (s.u[0] + z) * s.grad[0][c] + s.u[1] * s.grad[1][c] + s.u[2] * s.grad[2][c];
        } else {
          f += params.lambda * s.grad[0][c];
        }
        F[i] = f;
      }
    }
  }
  ManufacturedCase mc{kind, seed, amplitude, params, Field(grid, 3, std::move(u)), Field(grid, 1, std::move(p)),
                      Field(grid, 3, std::move(F)), std::nullopt};
  if (ob) {
    // pressure gauge of the exterior solver: zero annulus mean per slice, zero in the solid
    std::vector<double> pg(mc.p.samples().begin(), mc.p.samples().end());
    for (int t = 0; t < nt; ++t) {
      double mean = 0.0;
      const auto tu = static_cast<std::size_t>(t);
      for (std::size_t c = 0; c < N; ++c)
        if (ob->in_annulus(c)) mean += pg[tu * N + c];
      if (ob->annulus_count() > 0) mean /= static_cast<double>(ob->annulus_count());
      for (std::size_t c = 0; c < N; ++c) pg[tu * N + c] = ob->solid(c) ? 0.0 : pg[tu * N + c] - mean;
    }
    mc.p = Field(grid, 1, std::move(pg));
    mc.u = zero_solid(mc.u);
    const auto cells = ob->boundary_cells();
    std::vector<double> g(static_cast<std::size_t>(nt) * cells.size() * 3);
    for (int t = 0; t < nt; ++t)
      for (std::size_t s = 0; s < cells.size(); ++s)
        for (int c = 0; c < 3; ++c) g[(static_cast<std::size_t>(t) * cells.size() + s) * 3 + static_cast<std::size_t>(c)] = mc.u(t, c, cells[s]);
    mc.bc = BoundaryData(grid, std::move(g));
  }
  return mc;
}

MmsResult run_mms(const ManufacturedCase& mc, const PicardConfig& cfg) {
  const auto& g = mc.u.grid();
  MmsResult out;
  Field u(mc.u.grid_ptr(), 3), p(mc.u.grid_ptr(), 1);
  switch (mc.kind) {
    case CaseKind::wholespace_linear: {
      auto s = solve_wholespace_tp_oseen(mc.F, mc.params);
      u = std::move(s.u), p = std::move(s.p);
      break;
    }
    case CaseKind::exterior_linear: {
      auto s = solve_exterior_tp_oseen(mc.F, *mc.bc, mc.params);
      u = std::move(s.u), p = std::move(s.p);
      break;
    }
    case CaseKind::nonlinear: {
      auto s = picard_solve(mc.F, mc.bc ? &*mc.bc : nullptr, mc.params, cfg);
      u = std::move(s.u), p = std::move(s.p);
      out.residual = s.report.history.back().residual;
      out.iterations = static_cast<int>(s.report.history.size());
      break;
    }
  }
  auto rel = [&](const Field& a, const Field& b) {
    double num = 0.0, den = 0.0;
    for (int t = 0; t < g.nt(); ++t)
      for (int c = 0; c < a.ncomp(); ++c) {
        const auto x = a.block(t, c), y = b.block(t, c);
        for (std::size_t i = 0; i < g.spatial_size(); ++i)
          if (g.fluid(i)) {
            num += (x[i] - y[i]) * (x[i] - y[i]);
            den += y[i] * y[i];
          }
      }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  };
  out.velocity_error = rel(u, mc.u);
  out.pressure_error = rel(p, mc.p);
  return out;
}

int default_band(int n) { return std::max(1, n / 4); }

Field random_band_limited(const GridPtr& grid, int ncomp, std::uint64_t seed, int band_t, int band_x) {
  if (band_t < 0 || band_x < 0) throw std::invalid_argument("bands must be nonnegative");
  const auto& d = grid->dims();
  const std::size_t N = grid->spatial_size();
  std::vector<cplx> c(static_cast<std::size_t>(grid->nt()) * static_cast<std::size_t>(ncomp) * N);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int kt = 0; kt < grid->nt(); ++kt) {
    if (std::abs(fft::wavenumber(kt, grid->nt())) > band_t) continue;
    for (int comp = 0; comp < ncomp; ++comp)
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x) {
            if (std::abs(fft::wavenumber(x, d.nx)) > band_x || std::abs(fft::wavenumber(y, d.ny)) > band_x ||
                std::abs(fft::wavenumber(z, d.nz)) > band_x)
              continue;
            const double re = nd(rng), im = nd(rng);
            c[(static_cast<std::size_t>(kt) * static_cast<std::size_t>(ncomp) + static_cast<std::size_t>(comp)) * N +
              d.index(z, y, x)] = cplx(re, im);
          }
  }
  const Field f = from_spectral(grid, ncomp, c);
  return Field(grid, ncomp, std::vector<double>(f.samples().begin(), f.samples().end()));
}

Field random_solenoidal(const GridPtr& grid, std::uint64_t seed, int band_t, int band_x) {
  if (grid->backend() != Backend::spectral) throw std::invalid_argument("random_solenoidal needs the spectral backend");
  return leray_project(random_band_limited(grid, 3, seed, band_t, band_x));
}

}  // namespace tpflow
