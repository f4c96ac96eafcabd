#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpflow/field.hpp"
#include "tpflow/gmres.hpp"

namespace tpflow {

// Viscosity, translation profile zeta(t_j) (mean lambda) and the admissible upper bound lambda0.
struct OseenParams {
  double nu = 1.0;
  double lambda = 0.0;
  std::vector<double> zeta;
  double lambda0 = 1.0;

  // lambda is taken as the time average of zeta.
  static OseenParams make(double nu, std::vector<double> zeta, double lambda0);
  static OseenParams constant(double nu, double lambda, int nt, double lambda0);
  // zeta(t) = lambda (1 + amp cos(2 pi t / T)).
  static OseenParams towed(double nu, double lambda, double amp, int nt, double lambda0);
  void validate(int nt) const;
  std::vector<double> zeta_oscillatory() const;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
  double achieved_residual() const { return achieved_; }

 private:
  double achieved_;
};

// Velocity samples on the Dirichlet cells of an obstacle grid, stored (t, slot, component).
class BoundaryData {
 public:
  explicit BoundaryData(GridPtr grid);
  BoundaryData(GridPtr grid, std::vector<double> values);

  static BoundaryData zero(GridPtr grid) { return BoundaryData(std::move(grid)); }
  // fn(t_index, position, normal) -> velocity
  static BoundaryData from_function(GridPtr grid, const std::function<Vec3(int, const Vec3&, const Vec3&)>& fn);
  // Body moving with velocity -zeta(t) e1: u = -zeta(t) e1 on the body after the change of frame.
  static BoundaryData towed(GridPtr grid, const OseenParams& params);

  const PeriodicGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t cells() const { return cells_; }
  std::span<const double> values() const { return values_; }
  Vec3 at(int t, std::size_t slot) const;

  // Flux sum_b u.n dS per time slice with radial normals and dS = (hx hy hz)^(2/3).
  std::vector<double> flux() const;
  double surface_area() const;
  // Throws std::invalid_argument when some slice has |flux| > 1e-10 * area.
  void check_flux() const;
  // Subtract the normal component's mean so every slice has zero flux.
  BoundaryData remove_flux() const;

  BoundaryData steady_part() const;
  BoundaryData oscillatory_part() const;
  BoundaryData scaled(double a) const;
  BoundaryData operator+(const BoundaryData& o) const;

  // Temporal coefficients k = 0..kmax as complex (component, slot) arrays.
  std::vector<std::vector<cplx>> time_modes(int kmax) const;

 private:
  GridPtr grid_;
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

struct ModeEntry {
  int k = 0;
  double residual = 0.0;
  double c_k = 0.0;
  double seconds = 0.0;
  int iterations = 0;
};

struct LinearSolveReport {
  std::string backend;
  std::map<int, ModeEntry> modes;
  std::string to_csv() const;  // k,residual,c_k,seconds
  double max_residual() const;
};

// A steady mode cannot carry a net force in a periodic box. The box drops the mean force density,
// which shows up as a uniform pressure gradient: p = p_periodic + grad_p_mean . x.
struct LinearSolution {
  Field u;
  Field p;  // periodic part
  LinearSolveReport report;
  Vec3 grad_p_mean{};
};

struct ModeSolution {
  ModeField u;
  ModeField p;
  double residual = 0.0;
  int iterations = 0;
  double data_defect = 0.0;  // relative size of the removed discrete-flux component of g
  std::array<cplx, 3> grad_p_mean{};  // nonzero for sigma = 0 only
};

// Per-mode solver for sigma u - nu Lap_h u + lambda D1 u + G p = F, D.u = 0 on the fluid cells of an
// obstacle grid with u = g on the Dirichlet cells. The whole periodic box is inverted by FFT and the
// Dirichlet rows are met by point forces on the boundary cells (capacitance system, solved by GMRES).
// Solid cells next to the boundary (ghost cells) carry the mean of their neighbouring boundary values,
// so continuity at the boundary cells closes the system for the boundary pressure.
//
// For sigma = 0 a uniform velocity U can be traded against the mean pressure gradient without
// touching the boundary values (u -> u + U - S(U) for the solution operator S with data U). The
// solver picks U so that the velocity averages to zero over the outermost box faces.
//
// Centered differences couple cells two apart, so the solid can enclose pockets of one parity
// sublattice cut off by boundary cells. Each pocket's indicator phi has a gradient supported on the
// boundary, and D.u = 0 then forces sum_b (G phi).g = 0: a discrete flux condition. The solver
// enforces the part of g satisfying these conditions and reports the removed remainder.
class ExteriorModeSolver {
 public:
  ExteriorModeSolver(GridPtr grid, cplx sigma, double nu, double lambda, GmresOptions opt = {});

  // g: boundary values, component-major (3 * cells). guess: optional boundary forces from a previous solve.
  ModeSolution solve(const ModeField& F, std::span<const cplx> g, std::vector<cplx>* forces = nullptr) const;

  // Whole-box periodic solve: u, p from forcing F (no obstacle). The mean velocity coefficient is zero.
  void box_solve(std::span<const cplx> F, std::span<cplx> u, std::span<cplx> p) const;

  cplx sigma() const { return sigma_; }
  // Number of independent discrete flux conditions the boundary values must satisfy.
  std::size_t flux_conditions() const { return flux_dirs_.size(); }
  // g minus its components along the discrete flux directions.
  std::vector<cplx> consistent_part(std::span<const cplx> g) const;
  // Length of the force vector: 3 * (boundary + ghost cells).
  std::size_t force_count() const { return 3 * pinned_.size(); }

 private:
  void box_apply(std::vector<cplx>& work, bool want_pressure, std::span<cplx> p) const;
  ModeSolution solve_box_gauge(const ModeField& F, std::span<const cplx> g, std::vector<cplx>* forces) const;
  void apply_far_gauge(ModeSolution& sol) const;
  std::array<cplx, 3> far_mean(const ModeField& u) const;
  struct GaugeBasis {
    std::once_flag once;
    std::vector<ModeSolution> unit;  // zero forcing, data e_c
  };
  std::shared_ptr<GaugeBasis> gauge_ = std::make_shared<GaugeBasis>();
  std::vector<std::size_t> far_;
  void find_flux_directions();
  GridPtr grid_;
  cplx sigma_;
  double nu_, lambda_;
  GmresOptions opt_;
  std::vector<double> sx_, sy_, sz_, kx_, ky_, kz_;
  std::vector<std::size_t> shell_;
  std::vector<std::size_t> solid_;
  std::vector<std::size_t> pinned_;                  // boundary cells, then ghost cells
  std::vector<std::vector<std::size_t>> ghost_src_;  // boundary slots next to each ghost cell
  std::vector<cplx> pin_values(std::span<const cplx> g) const;
  std::vector<std::vector<double>> flux_dirs_;   // orthonormal, 3 * shell size
  std::vector<std::vector<double>> null_dirs_;   // orthonormal, 3 * pinned size
  std::vector<std::vector<double>> ghost_dirs_;  // pocket directions touching ghost cells only
};

// Largest |D.u| over interior fluid cells (all cells without obstacle).
double max_divergence(const Field& u);

// d_t u - nu Lap u + lambda d1 u + grad p with the grid's operators.
// grad_p_mean: uniform steady pressure gradient added to G p.
Field forward_apply(const Field& u, const Field& p, const OseenParams& params, const Vec3& grad_p_mean = {});
Field forward_apply(const Field& u, const Field& p, double nu, double lambda, const Vec3& grad_p_mean = {});

// Exact symbol inversion on the spectral backend. Temporal Nyquist content of F is dropped.
LinearSolution solve_wholespace_tp_oseen(const Field& F, const OseenParams& params);

// One temporal mode k >= 0 on the exterior backend (k = 0 needs lambda > 0).
ModeSolution solve_mode_exterior(const ModeField& F_k, std::span<const cplx> g_k, int k, const OseenParams& params,
                                 std::vector<cplx>* forces = nullptr, GmresOptions opt = {});
LinearSolution solve_exterior_tp_oseen(const Field& F, const BoundaryData& bc, const OseenParams& params);

struct Lift {
  Field u;
  Field p;
  Vec3 grad_p_mean{};
};
// Steady Oseen lift with data bc_steady and zero forcing.
Lift solve_lift_steady(const BoundaryData& bc_steady, const OseenParams& params, GmresOptions opt = {});
// Resolvent lift (I - nu Lap_h) W + G p_W = 0 with data bc_osc, per time slice.
Lift solve_lift_oscillatory(const BoundaryData& bc_osc, const OseenParams& params, GmresOptions opt = {});

// ((2 pi/T)|k| ||u_k||_2 + ||grad^2 u_k||_2 + ||grad p_k||_2) / ||F_k||_2 with grid derivatives.
double mode_constant(const ModeField& F, const ModeField& u, const ModeField& p, int k);

}  // namespace tpflow
