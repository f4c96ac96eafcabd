#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <numbers>
#include <sstream>
#include <thread>

#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"
#include "tpflow/oseen.hpp"
#include "tpflow/parallel.hpp"
#include "tpflow/stencil.hpp"

namespace tpflow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI(0.0, 1.0);

const ObstacleMask& require_obstacle(const PeriodicGrid& g, const char* who) {
  if (g.backend() != Backend::exterior || !g.obstacle())
    throw std::invalid_argument(std::string(who) + " needs an exterior grid with an obstacle");
  return *g.obstacle();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Spatial derivatives of one complex block with the grid's operators.
std::vector<cplx> mode_diff(const PeriodicGrid& g, std::span<const cplx> in, int axis, int order) {
  std::vector<cplx> out(in.size());
  const auto& d = g.dims();
  if (g.backend() == Backend::exterior) {
    if (order == 1)
      stencil::first<cplx>(in, out, d, axis, g.h(axis));
    else
      stencil::second<cplx>(in, out, d, axis, g.h(axis));
    return out;
  }
  std::copy(in.begin(), in.end(), out.begin());
  const std::array<fft::Dim, 3> all{fft::Dim{d.nx, 1}, fft::Dim{d.ny, d.nx}, fft::Dim{d.nz, static_cast<std::ptrdiff_t>(d.nx) * d.ny}};
  const std::array<fft::Dim, 1> tdim{all[static_cast<std::size_t>(axis)]};
  std::array<fft::Dim, 2> batch{};
  for (int i = 0, b = 0; i < 3; ++i)
    if (i != axis) batch[static_cast<std::size_t>(b++)] = all[static_cast<std::size_t>(i)];
  fft::transform(out.data(), tdim, batch, fft::Direction::forward);
  const int n = g.n(axis);
  const double k0 = kTwoPi / g.box_len();
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    const int j = d.coords(cell)[static_cast<std::size_t>(axis)];
    const int m = fft::wavenumber(j, n);
    const double xi = k0 * m;
    const cplx f = order == 1 ? (m == -n / 2 ? cplx(0.0) : kI * xi) : cplx(-xi * xi);
    out[cell] *= f / static_cast<double>(n);
  }
  fft::transform(out.data(), tdim, batch, fft::Direction::inverse);
  return out;
}

template <class Pred>
double l2_sq(const PeriodicGrid& g, std::span<const cplx> v, Pred&& keep) {
  double s = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c)
    if (keep(c)) s += std::norm(v[c]);
  return s * g.cell_volume();
}

}  // namespace

void project_out(const std::vector<std::vector<double>>& basis, std::span<cplx> v) {
  for (const auto& q : basis) {
    cplx dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
  }
}

int solver_threads() {
  if (const char* e = std::getenv("TPFLOW_THREADS")) {
    const int n = std::atoi(e);
    if (n >= 1) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------- parameters

OseenParams OseenParams::make(double nu, std::vector<double> zeta, double lambda0) {
  if (zeta.empty()) throw std::invalid_argument("translation profile is empty");
  double m = 0.0;
  for (double z : zeta) m += z;
  m /= static_cast<double>(zeta.size());
  OseenParams p{nu, m, std::move(zeta), lambda0};
  p.validate(static_cast<int>(p.zeta.size()));
  return p;
}

OseenParams OseenParams::constant(double nu, double lambda, int nt, double lambda0) {
  return make(nu, std::vector<double>(static_cast<std::size_t>(nt), lambda), lambda0);
}

OseenParams OseenParams::towed(double nu, double lambda, double amp, int nt, double lambda0) {
  std::vector<double> z(static_cast<std::size_t>(nt));
  for (int j = 0; j < nt; ++j) z[static_cast<std::size_t>(j)] = lambda * (1.0 + amp * std::cos(kTwoPi * j / nt));
  auto p = make(nu, std::move(z), lambda0);
  return p;
}

void OseenParams::validate(int nt) const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("viscosity must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("mean translation lambda must be nonnegative");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
  if (lambda > lambda0) throw std::invalid_argument("lambda exceeds the upper bound lambda0");
  if (static_cast<int>(zeta.size()) != nt) throw std::invalid_argument("translation profile needs n_t samples");
  double m = 0.0;
  for (double z : zeta) {
    if (!std::isfinite(z)) throw std::invalid_argument("translation profile is not finite");
    m += z;
  }
  m /= nt;
  if (std::abs(m - lambda) > 1e-13 * std::max(1.0, std::abs(lambda)))
    throw std::invalid_argument("time average of the translation profile differs from lambda");
}

std::vector<double> OseenParams::zeta_oscillatory() const {
  std::vector<double> z(zeta);
  for (auto& v : z) v -= lambda;
  return z;
}

// ---------------------------------------------------------------- boundary data

BoundaryData::BoundaryData(GridPtr grid) : grid_(std::move(grid)) {
  cells_ = require_obstacle(*grid_, "boundary data").boundary_cells().size();
  values_.assign(static_cast<std::size_t>(grid_->nt()) * cells_ * 3, 0.0);
}

BoundaryData::BoundaryData(GridPtr grid, std::vector<double> values) : BoundaryData(std::move(grid)) {
  if (values.size() != values_.size()) throw std::invalid_argument("boundary data has the wrong number of samples");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("boundary data is not finite");
  values_ = std::move(values);
}

BoundaryData BoundaryData::from_function(GridPtr grid, const std::function<Vec3(int, const Vec3&, const Vec3&)>& fn) {
  BoundaryData b(grid);
  const auto& ob = *grid->obstacle();
  std::size_t i = 0;
  for (int t = 0; t < grid->nt(); ++t)
    for (std::size_t s = 0; s < b.cells_; ++s) {
      const auto v = fn(t, grid->position(ob.boundary_cells()[s]), ob.normals()[s]);
      for (double c : v) b.values_[i++] = c;
    }
  return BoundaryData(std::move(grid), std::move(b.values_));
}

BoundaryData BoundaryData::towed(GridPtr grid, const OseenParams& params) {
  params.validate(grid->nt());
  return from_function(grid, [&](int t, const Vec3&, const Vec3&) {
    return Vec3{-params.zeta[static_cast<std::size_t>(t)], 0.0, 0.0};
  });
}

Vec3 BoundaryData::at(int t, std::size_t slot) const {
  const std::size_t o = (static_cast<std::size_t>(t) * cells_ + slot) * 3;
  return {values_[o], values_[o + 1], values_[o + 2]};
}

double BoundaryData::surface_area() const {
  const auto& h = grid_->spacing();
  return static_cast<double>(cells_) * std::cbrt(h[0] * h[1] * h[2]) * std::cbrt(h[0] * h[1] * h[2]);
}

std::vector<double> BoundaryData::flux() const {
  const auto& n = grid_->obstacle()->normals();
  const double dS = cells_ ? surface_area() / static_cast<double>(cells_) : 0.0;
  std::vector<double> out(static_cast<std::size_t>(grid_->nt()), 0.0);
  for (int t = 0; t < grid_->nt(); ++t) {
    double s = 0.0;
    for (std::size_t b = 0; b < cells_; ++b) {
      const auto u = at(t, b);
      s += (u[0] * n[b][0] + u[1] * n[b][1] + u[2] * n[b][2]) * dS;
    }
    out[static_cast<std::size_t>(t)] = s;
  }
  return out;
}

void BoundaryData::check_flux() const {
  const double area = surface_area();
  const auto f = flux();
  for (std::size_t t = 0; t < f.size(); ++t)
    if (std::abs(f[t]) > 1e-10 * area) {
      std::ostringstream os;
      os << "boundary data has nonzero flux " << f[t] << " at time slice " << t;
      throw std::invalid_argument(os.str());
    }
}

BoundaryData BoundaryData::remove_flux() const {
  const auto& n = grid_->obstacle()->normals();
  const auto f = flux();
  std::vector<double> v(values_);
  for (int t = 0; t < grid_->nt(); ++t) {
    const double c = f[static_cast<std::size_t>(t)] / surface_area();
    for (std::size_t b = 0; b < cells_; ++b)
      for (std::size_t k = 0; k < 3; ++k) v[(static_cast<std::size_t>(t) * cells_ + b) * 3 + k] -= c * n[b][k];
  }
  return BoundaryData(grid_, std::move(v));
}

BoundaryData BoundaryData::steady_part() const {
  const std::size_t block = cells_ * 3;
  std::vector<double> mean(block, 0.0);
  for (int t = 0; t < grid_->nt(); ++t)
    for (std::size_t i = 0; i < block; ++i) mean[i] += values_[static_cast<std::size_t>(t) * block + i];
  for (auto& m : mean) m /= grid_->nt();
  std::vector<double> v(values_.size());
  for (int t = 0; t < grid_->nt(); ++t) std::copy(mean.begin(), mean.end(), v.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * block));
  return BoundaryData(grid_, std::move(v));
}

BoundaryData BoundaryData::oscillatory_part() const {
  const auto s = steady_part();
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= s.values_[i];
  return BoundaryData(grid_, std::move(v));
}

BoundaryData BoundaryData::scaled(double a) const {
  std::vector<double> v(values_);
  for (auto& x : v) x *= a;
  return BoundaryData(grid_, std::move(v));
}

BoundaryData BoundaryData::operator+(const BoundaryData& o) const {
  if (!grid_->same_shape(*o.grid_)) throw std::invalid_argument("boundary data on different grids");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.values_[i];
  return BoundaryData(grid_, std::move(v));
}

std::vector<std::vector<cplx>> BoundaryData::time_modes(int kmax) const {
  const int nt = grid_->nt();
  if (kmax < 0 || kmax > nt / 2) throw std::invalid_argument("temporal mode index out of range");
  const std::size_t block = cells_ * 3;
  std::vector<cplx> c(values_.begin(), values_.end());
  if (block > 0) {
    const std::array<fft::Dim, 1> dims{fft::Dim{nt, static_cast<std::ptrdiff_t>(block)}};
    const std::array<fft::Dim, 1> batch{fft::Dim{static_cast<int>(block), 1}};
    fft::transform(c.data(), dims, batch, fft::Direction::forward);
  }
  std::vector<std::vector<cplx>> out;
  for (int k = 0; k <= kmax; ++k) {
    std::vector<cplx> m(block);
    for (std::size_t b = 0; b < cells_; ++b)
      for (std::size_t comp = 0; comp < 3; ++comp)
        m[comp * cells_ + b] = c[static_cast<std::size_t>(k) * block + b * 3 + comp] / static_cast<double>(nt);
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- report

std::string LinearSolveReport::to_csv() const {
  std::ostringstream os;
  os << "k,residual,c_k,seconds\n";
  for (const auto& [k, e] : modes) os << k << ',' << format_g17(e.residual) << ',' << format_g17(e.c_k) << ',' << format_g17(e.seconds) << '\n';
  return os.str();
}

double LinearSolveReport::max_residual() const {
  double m = 0.0;
  for (const auto& [k, e] : modes) m = std::max(m, e.residual);
  return m;
}

// ---------------------------------------------------------------- exterior mode solver

ExteriorModeSolver::ExteriorModeSolver(GridPtr grid, cplx sigma, double nu, double lambda, GmresOptions opt)
    : grid_(std::move(grid)), sigma_(sigma), nu_(nu), lambda_(lambda), opt_(opt) {
  if (!(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  auto symbols = [&](int axis, std::vector<double>& s, std::vector<double>& k2) {
    const int n = grid_->n(axis);
    const double h = grid_->h(axis);
    s.resize(static_cast<std::size_t>(n));
    k2.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double xh = kTwoPi * fft::wavenumber(j, n) / grid_->box_len() * h;
      // sin(pi) is not exactly zero in floating point
      s[static_cast<std::size_t>(j)] = 2 * j == n ? 0.0 : std::sin(xh) / h;
      k2[static_cast<std::size_t>(j)] = (2.0 - 2.0 * std::cos(xh)) / (h * h);
    }
  };
  symbols(0, sx_, kx_);
  symbols(1, sy_, ky_);
  symbols(2, sz_, kz_);
  if (const auto* ob = grid_->obstacle()) {
    shell_.assign(ob->boundary_cells().begin(), ob->boundary_cells().end());
    for (std::size_t c = 0; c < grid_->spatial_size(); ++c)
      if (ob->solid(c)) solid_.push_back(c);
    pinned_ = shell_;
    const auto& d = grid_->dims();
    for (std::size_t c = 0; c < grid_->spatial_size(); ++c) {
      const auto xyz = d.coords(c);
      if (xyz[0] == 0 || xyz[1] == 0 || xyz[2] == 0) far_.push_back(c);
    }
    for (auto c : solid_) {
      const auto xyz = d.coords(c);
      std::vector<std::size_t> src;
      for (int a = 0; a < 3; ++a)
        for (int by : {-1, 1}) {
          auto q = xyz;
          const int n = grid_->n(a);
          auto& v = q[static_cast<std::size_t>(a)];
          v = ((v + by) % n + n) % n;
          if (const auto slot = ob->boundary_slot(d.index(q[2], q[1], q[0])); slot >= 0) src.push_back(static_cast<std::size_t>(slot));
        }
      if (src.empty()) continue;
      pinned_.push_back(c);
      ghost_src_.push_back(std::move(src));
    }
    find_flux_directions();
  }
}

void ExteriorModeSolver::find_flux_directions() {
  const auto& d = grid_->dims();
  const std::size_t N = grid_->spatial_size(), m = shell_.size();
  std::vector<std::size_t> parent(N);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto shift = [&](std::size_t cell, int axis, int by) {
    auto c = d.coords(cell);
    const int n = grid_->n(axis);
    auto& v = c[static_cast<std::size_t>(axis)];
    v = ((v + by) % n + n) % n;
    return d.index(c[2], c[1], c[0]);
  };
  std::vector<std::uint8_t> pinned(N, 0);
  for (auto c : pinned_) pinned[c] = 1;
  // link j and j + 2e_a unless the cell between them is pinned
  for (std::size_t j = 0; j < N; ++j)
    for (int a = 0; a < 3; ++a)
      if (!pinned[shift(j, a, 1)]) {
        const auto r1 = find(j), r2 = find(shift(j, a, 2));
        if (r1 != r2) parent[r1] = r2;
      }
  std::map<std::size_t, std::vector<std::size_t>> pockets;
  std::vector<std::size_t> size(N, 0);
  for (std::size_t j = 0; j < N; ++j) ++size[find(j)];
  for (std::size_t j = 0; j < N; ++j) {
    const auto r = find(j);
    if (size[r] * 16 < N) pockets[r].push_back(j);
  }
  std::vector<std::size_t> root(N);
  for (std::size_t j = 0; j < N; ++j) root[j] = find(j);
  const std::size_t mp = pinned_.size();
  // Gram-Schmidt against an orthonormal set; false if nothing is left
  auto add_orthonormal = [](std::vector<std::vector<double>>& basis, std::vector<double> v) {
    for (const auto& q : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-8) return;
    for (auto& x : v) x /= nrm;
    basis.push_back(std::move(v));
  };
  std::vector<std::vector<double>> mixed;
  for (const auto& [r, cells] : pockets) {
    // G phi on the pinned cells: a null vector of the capacitance matrix from both sides
    std::vector<double> v(3 * mp, 0.0);
    bool on_shell = false;
    for (std::size_t b = 0; b < mp; ++b)
      for (int a = 0; a < 3; ++a) {
        const double hi = root[shift(pinned_[b], a, 1)] == r ? 1.0 : 0.0;
        const double lo = root[shift(pinned_[b], a, -1)] == r ? 1.0 : 0.0;
        v[static_cast<std::size_t>(a) * mp + b] = hi - lo;
        on_shell = on_shell || (b < m && hi != lo);
      }
    add_orthonormal(null_dirs_, v);
    if (on_shell) mixed.push_back(std::move(v));
    else add_orthonormal(ghost_dirs_, std::move(v));
  }
  // Pockets reaching the boundary constrain g itself: pull them back through the ghost averaging.
  for (auto v : mixed) {
    for (const auto& q : ghost_dirs_) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
    }
    std::vector<double> pulled(3 * m, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t b = 0; b < m; ++b) pulled[c * m + b] += v[c * mp + b];
      for (std::size_t b = m; b < mp; ++b) {
        const auto& src = ghost_src_[b - m];
        for (auto sb : src) pulled[c * m + sb] += v[c * mp + b] / static_cast<double>(src.size());
      }
    }
    add_orthonormal(flux_dirs_, std::move(pulled));
  }
}

std::vector<cplx> ExteriorModeSolver::consistent_part(std::span<const cplx> g) const {
  std::vector<cplx> out(g.begin(), g.end());
  project_out(flux_dirs_, out);
  return out;
}

std::vector<cplx> ExteriorModeSolver::pin_values(std::span<const cplx> g) const {
  const std::size_t m = shell_.size(), mp = pinned_.size();
  std::vector<cplx> out(3 * mp);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < m; ++i) out[c * mp + i] = g[c * m + i];
    for (std::size_t i = m; i < mp; ++i) {
      cplx acc = 0.0;
      for (auto sb : ghost_src_[i - m]) acc += g[c * m + sb];
      out[c * mp + i] = acc / static_cast<double>(ghost_src_[i - m].size());
    }
  }
  project_out(ghost_dirs_, out);
  return out;
}

void ExteriorModeSolver::box_apply(std::vector<cplx>& w, bool want_pressure, std::span<cplx> p) const {
  const auto& d = grid_->dims();
  const std::size_t N = grid_->spatial_size();
  fft::transform3d(w, d.nx, d.ny, d.nz, fft::Direction::forward);
  const double inv = 1.0 / static_cast<double>(N);
  std::size_t cell = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x, ++cell) {
        const double s[3] = {sx_[static_cast<std::size_t>(x)], sy_[static_cast<std::size_t>(y)], sz_[static_cast<std::size_t>(z)]};
        const double s2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        const cplx F[3] = {w[cell], w[N + cell], w[2 * N + cell]};
        const cplx ph = s2 > 0.0 ? -kI * (s[0] * F[0] + s[1] * F[1] + s[2] * F[2]) / s2 : cplx(0.0);
        const cplx sym = sigma_ + nu_ * (kx_[static_cast<std::size_t>(x)] + ky_[static_cast<std::size_t>(y)] + kz_[static_cast<std::size_t>(z)]) +
                         kI * (lambda_ * s[0]);
        for (std::size_t c = 0; c < 3; ++c)
          w[c * N + cell] = sym == cplx(0.0) ? cplx(0.0) : (F[c] - kI * s[c] * ph) / sym * inv;
        if (want_pressure) p[cell] = ph * inv;
      }
  fft::transform3d(w, d.nx, d.ny, d.nz, fft::Direction::inverse);
  if (want_pressure) fft::transform3d(p, d.nx, d.ny, d.nz, fft::Direction::inverse);
}

void ExteriorModeSolver::box_solve(std::span<const cplx> F, std::span<cplx> u, std::span<cplx> p) const {
  const std::size_t N = grid_->spatial_size();
  if (F.size() != 3 * N || u.size() != 3 * N || p.size() != N) throw std::invalid_argument("box_solve: wrong array sizes");
  std::vector<cplx> w(F.begin(), F.end());
  box_apply(w, true, p);
  std::copy(w.begin(), w.end(), u.begin());
}

ModeSolution ExteriorModeSolver::solve(const ModeField& F, std::span<const cplx> g, std::vector<cplx>* forces) const {
  auto sol = solve_box_gauge(F, g, forces);
  if (sigma_ == cplx(0.0) && !shell_.empty()) apply_far_gauge(sol);
  return sol;
}

std::array<cplx, 3> ExteriorModeSolver::far_mean(const ModeField& u) const {
  std::array<cplx, 3> m{};
  const std::size_t N = grid_->spatial_size();
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto i : far_) m[c] += u.data[c * N + i];
    m[c] /= static_cast<double>(far_.size());
  }
  return m;
}

void ExteriorModeSolver::apply_far_gauge(ModeSolution& sol) const {
  const std::size_t N = grid_->spatial_size(), m = shell_.size();
  std::call_once(gauge_->once, [&] {
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<cplx> e(3 * m, cplx(0.0));
      std::fill(e.begin() + static_cast<std::ptrdiff_t>(c * m), e.begin() + static_cast<std::ptrdiff_t>((c + 1) * m), cplx(1.0));
      gauge_->unit.push_back(solve_box_gauge(ModeField(grid_, 3), e, nullptr));
    }
  });
  // far mean of u + sum_c U_c (e_c - S e_c) vanishes: M U = -a
  const auto a = far_mean(sol.u);
  std::array<std::array<cplx, 3>, 3> M{};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto b = far_mean(gauge_->unit[c].u);
    for (std::size_t r = 0; r < 3; ++r) M[r][c] = (r == c ? cplx(1.0) : cplx(0.0)) - b[r];
  }
  // 3x3 Gaussian elimination with partial pivoting
  std::array<cplx, 3> U{-a[0], -a[1], -a[2]};
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < 3; ++r)
      if (std::abs(M[r][k]) > std::abs(M[piv][k])) piv = r;
    std::swap(M[k], M[piv]);
    std::swap(U[k], U[piv]);
    for (std::size_t r = k + 1; r < 3; ++r) {
      const cplx f = M[r][k] / M[k][k];
      for (std::size_t c = k; c < 3; ++c) M[r][c] -= f * M[k][c];
      U[r] -= f * U[k];
    }
  }
  for (std::size_t k = 3; k-- > 0;) {
    for (std::size_t c = k + 1; c < 3; ++c) U[k] -= M[k][c] * U[c];
    U[k] /= M[k][k];
  }
  const auto& ob = *grid_->obstacle();
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& e = gauge_->unit[c];
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t i = 0; i < N; ++i)
        if (!ob.solid(i) && !ob.boundary(i)) sol.u.data[d * N + i] += U[c] * ((c == d ? cplx(1.0) : cplx(0.0)) - e.u.data[d * N + i]);
    for (std::size_t i = 0; i < N; ++i) sol.p.data[i] -= U[c] * e.p.data[i];
    for (std::size_t d = 0; d < 3; ++d) sol.grad_p_mean[d] -= U[c] * e.grad_p_mean[d];
  }
}

ModeSolution ExteriorModeSolver::solve_box_gauge(const ModeField& F, std::span<const cplx> g_in, std::vector<cplx>* forces) const {
  const std::size_t N = grid_->spatial_size(), m = shell_.size();
  if (F.ncomp != 3 || F.data.size() != 3 * N) throw std::invalid_argument("mode forcing must be a 3-vector mode field");
  if (g_in.size() != 3 * m) throw std::invalid_argument("boundary values have the wrong size");
  const std::vector<cplx> g = consistent_part(g_in);
  double gn = 0.0, dn = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gn += std::norm(g_in[i]);
    dn += std::norm(g_in[i] - g[i]);
  }

  std::vector<cplx> Ft(F.data);
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto i : shell_) Ft[c * N + i] = 0.0;
    for (auto i : solid_) Ft[c * N + i] = 0.0;
  }
  const std::size_t mp = pinned_.size();
  const auto target = pin_values(g);
  std::vector<cplx> w(Ft);
  box_apply(w, false, {});
  std::vector<cplx> b(3 * mp);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < mp; ++i) b[c * mp + i] = target[c * mp + i] - w[c * N + pinned_[i]];
  project_out(null_dirs_, b);

  std::vector<cplx> x(3 * mp, cplx(0.0));
  if (forces && forces->size() == 3 * mp) x = *forces;
  project_out(null_dirs_, x);
  GmresResult gr;
  if (mp > 0) {
    std::vector<cplx> work(3 * N), vp(3 * mp);
    // deflated: P C P + (I - P) with P the projector off the pocket null space
    auto apply = [&](std::span<const cplx> v, std::span<cplx> out) {
      std::copy(v.begin(), v.end(), vp.begin());
      project_out(null_dirs_, vp);
      std::fill(work.begin(), work.end(), cplx(0.0));
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < mp; ++i) work[c * N + pinned_[i]] = vp[c * mp + i];
      box_apply(work, false, {});
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < mp; ++i) out[c * mp + i] = work[c * N + pinned_[i]];
      project_out(null_dirs_, out);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i] - vp[i];
    };
    gr = gmres(apply, b, x, opt_);
    if (!gr.converged) {
      std::ostringstream os;
      os << "exterior mode solve did not converge: relative residual " << gr.relative_residual << " after " << gr.iterations
         << " iterations";
      throw SolverError(os.str(), gr.relative_residual);
    }
  }
  project_out(null_dirs_, x);
  if (forces) *forces = x;

  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < mp; ++i) Ft[c * N + pinned_[i]] += x[c * mp + i];
  ModeSolution out{ModeField(grid_, 3), ModeField(grid_, 1), gr.relative_residual, gr.iterations,
                   gn > 0.0 ? std::sqrt(dn / gn) : 0.0};
  if (sigma_ == cplx(0.0))
    for (std::size_t c = 0; c < 3; ++c) {
      cplx total = 0.0;
      for (std::size_t i = 0; i < N; ++i) total += Ft[c * N + i];
      out.grad_p_mean[c] = total / static_cast<double>(N);
    }
  box_apply(Ft, true, out.p.data);
  out.u.data = std::move(Ft);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < m; ++i) out.u.data[c * N + shell_[i]] = g[c * m + i];
    for (auto i : solid_) out.u.data[c * N + i] = 0.0;
  }
  if (const auto* ob = grid_->obstacle()) {
    cplx mean = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      if (ob->in_annulus(i)) mean += out.p.data[i];
    if (ob->annulus_count() > 0) mean /= static_cast<double>(ob->annulus_count());
    for (auto& v : out.p.data) v -= mean;
    for (auto i : solid_) out.p.data[i] = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------- field-level operations

double max_divergence(const Field& u) {
  const auto d = divergence(u);
  const auto& g = u.grid();
  double m = 0.0;
  for (int t = 0; t < g.nt(); ++t) {
    auto b = d.block(t, 0);
    for (std::size_t c = 0; c < g.spatial_size(); ++c)
      if (g.interior_fluid(c)) m = std::max(m, std::abs(b[c]));
  }
  return m;
}

Field forward_apply(const Field& u, const Field& p, double nu, double lambda, const Vec3& grad_p_mean) {
  if (u.ncomp() != 3 || p.ncomp() != 1) throw std::invalid_argument("forward_apply needs a velocity and a scalar pressure");
  Field out = diff(u, Axis::t);
  out -= nu * laplacian(u);
  out += lambda * diff(u, Axis::x);
  out += gradient(p);
  if (grad_p_mean != Vec3{})
    out += Field::generate(u.grid_ptr(), 3, [&](int, int c, std::size_t) { return grad_p_mean[static_cast<std::size_t>(c)]; });
  return out;
}

Field forward_apply(const Field& u, const Field& p, const OseenParams& params, const Vec3& grad_p_mean) {
  return forward_apply(u, p, params.nu, params.lambda, grad_p_mean);
}

double mode_constant(const ModeField& F, const ModeField& u, const ModeField& p, int k) {
  const auto& g = *u.grid;
  auto fluid = [&](std::size_t c) { return g.fluid(c); };
  auto inner = [&](std::size_t c) { return g.stencil_interior(c); };
  double fn = 0.0, un = 0.0, hn = 0.0, pn = 0.0;
  for (int c = 0; c < 3; ++c) {
    fn += l2_sq(g, F.comp(c), fluid);
    un += l2_sq(g, u.comp(c), fluid);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const auto d = i == j ? mode_diff(g, u.comp(c), i, 2) : mode_diff(g, mode_diff(g, u.comp(c), i, 1), j, 1);
        hn += l2_sq(g, d, inner);
      }
  }
  for (int i = 0; i < 3; ++i) pn += l2_sq(g, mode_diff(g, p.comp(0), i, 1), inner);
  if (fn == 0.0) return 0.0;
  return (g.omega() * std::abs(k) * std::sqrt(un) + std::sqrt(hn) + std::sqrt(pn)) / std::sqrt(fn);
}

LinearSolution solve_wholespace_tp_oseen(const Field& F, const OseenParams& params) {
  const auto& g = F.grid();
  if (g.backend() != Backend::spectral || g.obstacle()) throw std::invalid_argument("whole-space solve needs the spectral backend");
  if (F.ncomp() != 3) throw std::invalid_argument("forcing must be a vector field");
  params.validate(g.nt());
  const auto t0 = std::chrono::steady_clock::now();
  const auto Fs = F.has_spectral() ? F : to_spectral(F);
  const auto c = Fs.spectral();
  const auto& d = g.dims();
  const std::size_t N = g.spatial_size();
  const int nt = g.nt();
  const double k0 = kTwoPi / g.box_len();
  double scale = 0.0;
  for (auto v : c) scale = std::max(scale, std::abs(v));

  std::vector<cplx> uc(c.size()), pc(static_cast<std::size_t>(nt) * N);
  for (int kt = 0; kt < nt; ++kt) {
    const int k = fft::wavenumber(kt, nt);
    if (k == -nt / 2) continue;
    std::size_t cell = 0;
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x, ++cell) {
          const int m[3] = {fft::wavenumber(x, d.nx), fft::wavenumber(y, d.ny), fft::wavenumber(z, d.nz)};
          const int n[3] = {d.nx, d.ny, d.nz};
          double xi[3], xt[3], x2 = 0.0, t2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            xi[a] = k0 * m[a];
            xt[a] = m[a] == -n[a] / 2 ? 0.0 : xi[a];
            x2 += xi[a] * xi[a];
            t2 += xt[a] * xt[a];
          }
          cplx Fh[3];
          for (int a = 0; a < 3; ++a) Fh[a] = c[Fs.offset(kt, a) + cell];
          const cplx ph = t2 > 0.0 ? -kI * (xt[0] * Fh[0] + xt[1] * Fh[1] + xt[2] * Fh[2]) / t2 : cplx(0.0);
          const cplx sym = params.nu * x2 + kI * (params.lambda * xt[0] + g.omega() * k);
          pc[static_cast<std::size_t>(kt) * N + cell] = ph;
          if (sym == cplx(0.0)) {
            const double mag = std::abs(Fh[0]) + std::abs(Fh[1]) + std::abs(Fh[2]);
            if (params.lambda == 0.0 && mag > 1e-12 * std::max(scale, 1e-300))
              throw std::invalid_argument("steady part unsolvable at lambda=0: forcing has a nonzero mean");
            continue;
          }
          for (int a = 0; a < 3; ++a) uc[Fs.offset(kt, a) + cell] = (Fh[a] - kI * xt[a] * ph) / sym;
        }
  }
  LinearSolution out{from_spectral(F.grid_ptr(), 3, uc), from_spectral(F.grid_ptr(), 1, pc), {}};
  out.report.backend = "spectral";
  const double elapsed = seconds_since(t0);

  const int kmax = nt / 2 - 1;
  const auto Fm = time_modes(F, kmax);
  const auto um = time_modes(out.u, kmax);
  const auto pm = time_modes(out.p, kmax);
  const auto rm = time_modes(forward_apply(out.u, out.p, params) - F, kmax);
  for (int k = 0; k <= kmax; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    double fn = 0.0, rn = 0.0;
    for (auto v : Fm[ku].data) fn += std::norm(v);
    for (auto v : rm[ku].data) rn += std::norm(v);
    ModeEntry e;
    e.k = k;
    e.residual = fn > 0.0 ? std::sqrt(rn / fn) : std::sqrt(rn);
    e.c_k = mode_constant(Fm[ku], um[ku], pm[ku], k);
    e.seconds = elapsed / (kmax + 1);
    out.report.modes[k] = e;
  }
  return out;
}

ModeSolution solve_mode_exterior(const ModeField& F_k, std::span<const cplx> g_k, int k, const OseenParams& params,
                                 std::vector<cplx>* forces, GmresOptions opt) {
  const auto& g = *F_k.grid;
  require_obstacle(g, "solve_mode_exterior");
  if (k < 0 || k > g.nt() / 2 - 1) throw std::invalid_argument("temporal mode outside the retained range");
  if (k == 0 && params.lambda == 0.0)
    throw std::invalid_argument("steady exterior mode needs lambda > 0");
  ExteriorModeSolver solver(F_k.grid, cplx(0.0, g.omega() * k), params.nu, params.lambda, opt);
  return solver.solve(F_k, g_k, forces);
}

LinearSolution solve_exterior_tp_oseen(const Field& F, const BoundaryData& bc, const OseenParams& params) {
  const auto& g = F.grid();
  require_obstacle(g, "solve_exterior_tp_oseen");
  if (F.ncomp() != 3) throw std::invalid_argument("forcing must be a vector field");
  if (!g.same_shape(bc.grid())) throw std::invalid_argument("forcing and boundary data live on different grids");
  params.validate(g.nt());
  bc.check_flux();
  const int kmax = g.nt() / 2 - 1;
  const auto Fm = time_modes(F, kmax);
  const auto gm = bc.time_modes(kmax);
  std::vector<ModeSolution> sol(static_cast<std::size_t>(kmax) + 1);
  std::vector<ModeEntry> entries(sol.size());
  parallel_for(kmax + 1, [&](int k) {
    const auto ku = static_cast<std::size_t>(k);
    const auto t0 = std::chrono::steady_clock::now();
    sol[ku] = solve_mode_exterior(Fm[ku], gm[ku], k, params);
    entries[ku] = {k, sol[ku].residual, mode_constant(Fm[ku], sol[ku].u, sol[ku].p, k), seconds_since(t0), sol[ku].iterations};
  });
  std::vector<ModeField> um, pm;
  for (auto& s : sol) {
    um.push_back(std::move(s.u));
    pm.push_back(std::move(s.p));
  }
  LinearSolution out{from_time_modes(F.grid_ptr(), 3, um), from_time_modes(F.grid_ptr(), 1, pm), {}};
  for (std::size_t c = 0; c < 3; ++c) out.grad_p_mean[c] = sol[0].grad_p_mean[c].real();
  out.report.backend = "exterior";
  for (const auto& e : entries) out.report.modes[e.k] = e;
  return out;
}

Lift solve_lift_steady(const BoundaryData& bc_steady, const OseenParams& params, GmresOptions opt) {
  const auto gp = bc_steady.grid_ptr();
  params.validate(gp->nt());
  const auto gm = bc_steady.time_modes(0);
  const auto sol = solve_mode_exterior(ModeField(gp, 3), gm[0], 0, params, nullptr, opt);
  const std::array<ModeField, 1> um{sol.u}, pm{sol.p};
  return {from_time_modes(gp, 3, um), from_time_modes(gp, 1, pm),
          {sol.grad_p_mean[0].real(), sol.grad_p_mean[1].real(), sol.grad_p_mean[2].real()}};
}

Lift solve_lift_oscillatory(const BoundaryData& bc_osc, const OseenParams& params, GmresOptions opt) {
  const auto gp = bc_osc.grid_ptr();
  params.validate(gp->nt());
  const int nt = gp->nt(), half = nt / 2;
  const auto gm = bc_osc.time_modes(half);
  const ExteriorModeSolver solver(gp, cplx(1.0), params.nu, 0.0, opt);
  std::vector<ModeSolution> sol(static_cast<std::size_t>(half) + 1);
  parallel_for(half, [&](int i) {
    const auto k = static_cast<std::size_t>(i + 1);
    sol[k] = solver.solve(ModeField(gp, 3), gm[k], nullptr);
  });
  std::vector<ModeField> um{ModeField(gp, 3)}, pm{ModeField(gp, 1)};
  for (int k = 1; k < half; ++k) {
    um.push_back(sol[static_cast<std::size_t>(k)].u);
    pm.push_back(sol[static_cast<std::size_t>(k)].p);
  }
  Field W = from_time_modes(gp, 3, um), pW = from_time_modes(gp, 1, pm);
  // the real Nyquist coefficient contributes c (-1)^j
  const auto& nu = sol[static_cast<std::size_t>(half)].u;
  const auto& np = sol[static_cast<std::size_t>(half)].p;
  W += Field::generate(gp, 3, [&](int t, int c, std::size_t cell) { return (t % 2 ? -1.0 : 1.0) * nu.comp(c)[cell].real(); });
  pW += Field::generate(gp, 1, [&](int t, int, std::size_t cell) { return (t % 2 ? -1.0 : 1.0) * np.comp(0)[cell].real(); });
  return {W, pW};
}

}  // namespace tpflow
