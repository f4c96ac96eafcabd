#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpflow/oseen.hpp"

namespace tpflow {

// u = v + V + w + W, p = p_v + p_V + p_w + p_W: steady unknown, steady lift, oscillatory
// unknown, oscillatory lift. The steady parts also carry uniform pressure gradients gv, gV.
struct NonlinearState {
  Field v, pv, w, pw, V, pV, W, pW;
  Vec3 gv{}, gV{};

  static NonlinearState zero(const GridPtr& g);
  Field velocity() const { return v + V + w + W; }
  Field pressure() const { return pv + pV + pw + pW; }
  Vec3 pressure_gradient() const { return {gv[0] + gV[0], gv[1] + gV[1], gv[2] + gV[2]}; }
};

struct PicardConfig {
  double tolerance = 1e-8;
  int max_iter = 20;
  double omega = 1.0;
  double q = 1.25;
  void validate() const;
};

struct PicardIteration {
  int iter = 0;
  double residual = 0.0;
  double contraction_ratio = 0.0;  // residual / previous residual
};

struct SmallnessAdvice {
  double lambda = 0.0, q = 0.0;
  double epsilon = 0.0;  // advised data bound lambda^2
  double rho = 0.0;      // advised ball radius lambda
  double lambda_exponent = 0.0;  // (3q-3)/q
  std::vector<std::pair<std::string, double>> terms;  // seven self-map terms with unit constant
  std::size_t dominant = 0;
  double bound = 0.0;  // sum of the terms
};

struct SolveReport {
  std::vector<PicardIteration> history;
  double initial_residual = 0.0;
  double v_xoseen = 0.0, w_sobolev_q = 0.0, w_sobolev_3q = 0.0;
  SmallnessAdvice advice;
  std::string to_csv() const;  // iter,residual,contraction_ratio + labelled rows
};

class PicardError : public std::runtime_error {
 public:
  PicardError(const std::string& what, SolveReport report, bool diverged)
      : std::runtime_error(what), report_(std::move(report)), diverged_(diverged) {}
  const SolveReport& report() const { return report_; }
  bool diverged() const { return diverged_; }

 private:
  SolveReport report_;
  bool diverged_;
};

// Right-hand side of the steady subproblem (time independent).
Field assemble_rhs_steady(const NonlinearState& s, const Field& f, const OseenParams& params);
// Right-hand side of the oscillatory subproblem (zero time average).
Field assemble_rhs_oscillatory(const NonlinearState& s, const Field& f, const OseenParams& params);

// Solves the steady and oscillatory linear subproblems with homogeneous boundary values.
// Keeps per-mode solvers and boundary forces between calls to warm-start GMRES.
class LinearSubsolver {
 public:
  LinearSubsolver(GridPtr grid, OseenParams params);
  // Returns (v, p_v) and the uniform pressure gradient from a steady forcing.
  LinearSolution steady(const Field& F);
  // Returns (w, p_w) from a mean-free forcing.
  std::pair<Field, Field> oscillatory(const Field& F);

 private:
  GridPtr grid_;
  OseenParams params_;
  std::vector<std::optional<ExteriorModeSolver>> solvers_;
  std::vector<std::vector<cplx>> forces_;
};

NonlinearState picard_step(const NonlinearState& s, const Field& f, const OseenParams& params, LinearSubsolver& solver,
                           double omega = 1.0);

struct NonlinearResidual {
  double norm = 0.0;        // ||residual||_q over interior cells
  double scale = 0.0;       // max(||f||_q, ||linear part||_q, 1e-30)
  double relative = 0.0;    // norm / scale
  double boundary = 0.0;    // max |u - bc| over boundary cells
};

// d_t u + ((u + zeta e1).grad) u - nu Lap u + grad p - f, time-Nyquist filtered, over interior cells.
Field nonlinear_operator(const Field& u, const Field& p, const Field& f, const OseenParams& params,
                         const Vec3& grad_p_mean = {});
NonlinearResidual nonlinear_residual(const Field& u, const Field& p, const Field& f, const BoundaryData* bc,
                                     const OseenParams& params, double q, const Vec3& grad_p_mean = {});

SmallnessAdvice smallness_advisor(double lambda, double q);

struct NonlinearSolution {
  Field u, p;
  Vec3 grad_p_mean{};
  NonlinearState state;
  SolveReport report;
};

// Lifts from bc (exterior backend; pass nullptr on the spectral backend), then Picard iteration.
NonlinearSolution picard_solve(const Field& f, const BoundaryData* bc, const OseenParams& params, const PicardConfig& cfg,
                               const std::optional<NonlinearState>& initial = std::nullopt);
// Lifts only: the zero-unknown state for the given boundary data.
NonlinearState lifted_state(const GridPtr& g, const BoundaryData* bc, const OseenParams& params);

}  // namespace tpflow
