#include "tpflow/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"
#include "tpflow/parallel.hpp"

namespace tpflow {

namespace {

// Lifts and subproblems share this tolerance so shell overwrites stay below the residual target.
constexpr GmresOptions kInnerGmres{1e-12, 200, 40};

Field drift_field(const GridPtr& g, const OseenParams& params) {
  const std::vector<std::vector<double>> prof{params.zeta_oscillatory(), std::vector<double>(static_cast<std::size_t>(g->nt()), 0.0),
                                              std::vector<double>(static_cast<std::size_t>(g->nt()), 0.0)};
  return uniform_field(g, prof);
}

struct RhsPair {
  Field steady, oscillatory;
};

// Both right-hand sides, written through the bilinearity of advect with Us = v + V and Uo = w + W.
RhsPair assemble(const NonlinearState& s, const Field& f, const OseenParams& params, bool want_steady, bool want_osc) {
  const auto gp = s.v.grid_ptr();
  params.validate(gp->nt());
  const Field Us = s.v + s.V, Uo = s.w + s.W;
  const Field Z = drift_field(gp, params);
  const Field oo = advect(Uo, Uo);
  const Field zo = advect(Z, Uo);
  RhsPair out{Field(gp, 3), Field(gp, 3)};
  if (want_steady) {
    Field r = project_steady(f - oo - zo);
    r -= advect(Us, Us);
    out.steady = project_steady(r);
  }
  if (want_osc) {
    Field r = project_oscillatory(f - oo - zo);
    r -= advect(Us, Uo) + advect(Uo, Us) + advect(Z, Us);
    r -= diff(s.W, Axis::t);
    r += s.W;
    r -= params.lambda * diff(s.W, Axis::x);
    out.oscillatory = project_oscillatory(r);
  }
  return out;
}

double interior_lq(const Field& f, double q) {
  const auto& g = f.grid();
  if (!g.obstacle()) return lq_spacetime_norm(f, q);
  std::vector<double> s(f.samples().begin(), f.samples().end());
  for (int t = 0; t < g.nt(); ++t)
    for (int c = 0; c < f.ncomp(); ++c) {
      const std::size_t o = f.offset(t, c);
      for (std::size_t i = 0; i < g.spatial_size(); ++i)
        if (!g.interior_fluid(i)) s[o + i] = 0.0;
    }
  return lq_spacetime_norm(Field(f.grid_ptr(), f.ncomp(), std::move(s)), q);
}

}  // namespace

NonlinearState NonlinearState::zero(const GridPtr& g) {
  const Field u(g, 3), p(g, 1);
  return {u, p, u, p, u, p, u, p};
}

void PicardConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("Picard tolerance must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(omega > 0.0 && omega <= 1.0)) throw std::invalid_argument("relaxation factor must lie in (0, 1]");
  if (!(q >= 1.2 - 1e-12 && q <= 4.0 / 3.0 + 1e-12)) throw std::invalid_argument("q must lie in [6/5, 4/3]");
}

std::string SolveReport::to_csv() const {
  std::ostringstream os;
  os << "iter,residual,contraction_ratio\n";
  for (const auto& h : history) os << h.iter << ',' << format_g17(h.residual) << ',' << format_g17(h.contraction_ratio) << '\n';
  os << "initial_residual," << format_g17(initial_residual) << '\n';
  os << "v_xoseen," << format_g17(v_xoseen) << '\n';
  os << "w_sobolev_q," << format_g17(w_sobolev_q) << '\n';
  os << "w_sobolev_3q," << format_g17(w_sobolev_3q) << '\n';
  os << "epsilon," << format_g17(advice.epsilon) << '\n';
  os << "rho," << format_g17(advice.rho) << '\n';
  os << "lambda," << format_g17(advice.lambda) << '\n';
  return os.str();
}

Field assemble_rhs_steady(const NonlinearState& s, const Field& f, const OseenParams& params) {
  return assemble(s, f, params, true, false).steady;
}

Field assemble_rhs_oscillatory(const NonlinearState& s, const Field& f, const OseenParams& params) {
  return assemble(s, f, params, false, true).oscillatory;
}

LinearSubsolver::LinearSubsolver(GridPtr grid, OseenParams params) : grid_(std::move(grid)), params_(std::move(params)) {
  params_.validate(grid_->nt());
  if (!(params_.lambda > 0.0)) throw std::invalid_argument("the nonlinear problem needs lambda > 0");
  if (!grid_->obstacle()) return;
  const int kmax = grid_->nt() / 2 - 1;
  solvers_.resize(static_cast<std::size_t>(kmax) + 1);
  forces_.resize(solvers_.size());
  for (int k = 0; k <= kmax; ++k)
    solvers_[static_cast<std::size_t>(k)].emplace(grid_, cplx(0.0, grid_->omega() * k), params_.nu, params_.lambda, kInnerGmres);
}

LinearSolution LinearSubsolver::steady(const Field& F) {
  if (!grid_->obstacle()) return solve_wholespace_tp_oseen(project_steady(F), params_);
  const auto m = time_modes(F, 0);
  const std::vector<cplx> g(3 * grid_->obstacle()->boundary_cells().size());
  auto sol = solvers_[0]->solve(m[0], g, &forces_[0]);
  const std::array<ModeField, 1> um{std::move(sol.u)}, pm{std::move(sol.p)};
  return {from_time_modes(grid_, 3, um), from_time_modes(grid_, 1, pm), {},
          {sol.grad_p_mean[0].real(), sol.grad_p_mean[1].real(), sol.grad_p_mean[2].real()}};
}

std::pair<Field, Field> LinearSubsolver::oscillatory(const Field& F) {
  if (!grid_->obstacle()) {
    auto sol = solve_wholespace_tp_oseen(project_oscillatory(F), params_);
    return {project_oscillatory(sol.u), project_oscillatory(sol.p)};
  }
  const int kmax = grid_->nt() / 2 - 1;
  const auto m = time_modes(F, kmax);
  const std::vector<cplx> g(3 * grid_->obstacle()->boundary_cells().size());
  std::vector<ModeField> um(m.size(), ModeField(grid_, 3)), pm(m.size(), ModeField(grid_, 1));
  parallel_for(kmax, [&](int i) {
    const auto k = static_cast<std::size_t>(i + 1);
    auto sol = solvers_[k]->solve(m[k], g, &forces_[k]);
    um[k] = std::move(sol.u);
    pm[k] = std::move(sol.p);
  });
  return {from_time_modes(grid_, 3, um), from_time_modes(grid_, 1, pm)};
}

NonlinearState picard_step(const NonlinearState& s, const Field& f, const OseenParams& params, LinearSubsolver& solver,
                           double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) throw std::invalid_argument("relaxation factor must lie in (0, 1]");
  const auto rhs = assemble(s, f, params, true, true);
  auto st = solver.steady(rhs.steady);
  auto [w, pw] = solver.oscillatory(rhs.oscillatory);
  NonlinearState out = s;
  if (omega == 1.0) {
    out.v = std::move(st.u), out.pv = std::move(st.p), out.w = std::move(w), out.pw = std::move(pw);
    out.gv = st.grad_p_mean;
  } else {
    const double r = 1.0 - omega;
    out.v = omega * st.u + r * s.v;
    out.pv = omega * st.p + r * s.pv;
    for (std::size_t c = 0; c < 3; ++c) out.gv[c] = omega * st.grad_p_mean[c] + r * s.gv[c];
    out.w = omega * w + r * s.w;
    out.pw = omega * pw + r * s.pw;
  }
  return out;
}

Field nonlinear_operator(const Field& u, const Field& p, const Field& f, const OseenParams& params,
                         const Vec3& grad_p_mean) {
  Field r = forward_apply(u, p, params, grad_p_mean);
  r += advect(u, u);
  r += advect(drift_field(u.grid_ptr(), params), u);
  r -= f;
  return filter_time_nyquist(r);
}

NonlinearResidual nonlinear_residual(const Field& u, const Field& p, const Field& f, const BoundaryData* bc,
                                     const OseenParams& params, double q, const Vec3& grad_p_mean) {
  const auto& g = u.grid();
  params.validate(g.nt());
  NonlinearResidual out;
  out.norm = interior_lq(nonlinear_operator(u, p, f, params, grad_p_mean), q);
  const double lin = interior_lq(filter_time_nyquist(forward_apply(u, p, params, grad_p_mean)), q);
  out.scale = std::max({interior_lq(f, q), lin, 1e-30});
  out.relative = out.norm / out.scale;
  if (const auto* ob = g.obstacle()) {
    const auto cells = ob->boundary_cells();
    for (int t = 0; t < g.nt(); ++t)
      for (std::size_t s = 0; s < cells.size(); ++s) {
        const Vec3 target = bc ? bc->at(t, s) : Vec3{};
        for (int c = 0; c < 3; ++c)
          out.boundary = std::max(out.boundary, std::abs(u(t, c, cells[s]) - target[static_cast<std::size_t>(c)]));
      }
  }
  return out;
}

SmallnessAdvice smallness_advisor(double lambda, double q) {
  if (!(lambda > 0.0)) throw std::invalid_argument("smallness advisor needs lambda > 0");
  if (!(q >= 1.2 - 1e-12 && q <= 4.0 / 3.0 + 1e-12)) throw std::invalid_argument("q must lie in [6/5, 4/3]");
  SmallnessAdvice a;
  a.lambda = lambda;
  a.q = q;
  a.epsilon = lambda * lambda;
  a.rho = lambda;
  a.lambda_exponent = (3.0 * q - 3.0) / q;
  const double e = a.epsilon, r = a.rho;
  a.terms = {{"lambda^-(3q-3)/q rho^2", std::pow(lambda, -a.lambda_exponent) * r * r},
             {"lambda^-1 eps rho", e * r / lambda},
             {"lambda^-1/2 rho eps", r * e / std::sqrt(lambda)},
             {"rho eps", r * e},
             {"eps^2", e * e},
             {"lambda eps", lambda * e},
             {"eps", e}};
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    a.bound += a.terms[i].second;
    if (a.terms[i].second > a.terms[a.dominant].second) a.dominant = i;
  }
  return a;
}

NonlinearState lifted_state(const GridPtr& g, const BoundaryData* bc, const OseenParams& params) {
  auto s = NonlinearState::zero(g);
  if (!bc) return s;
  if (!g->obstacle()) throw std::invalid_argument("boundary data needs an obstacle grid");
  if (!g->same_shape(bc->grid())) throw std::invalid_argument("boundary data lives on a different grid");
  bc->check_flux();
  auto V = solve_lift_steady(bc->steady_part(), params, kInnerGmres);
  auto W = solve_lift_oscillatory(bc->oscillatory_part(), params, kInnerGmres);
  s.V = std::move(V.u), s.pV = std::move(V.p), s.W = std::move(W.u), s.pW = std::move(W.p);
  s.gV = V.grad_p_mean;
  return s;
}

NonlinearSolution picard_solve(const Field& f, const BoundaryData* bc, const OseenParams& params, const PicardConfig& cfg,
                               const std::optional<NonlinearState>& initial) {
  cfg.validate();
  const auto gp = f.grid_ptr();
  params.validate(gp->nt());
  if (!(params.lambda > 0.0)) throw std::invalid_argument("the nonlinear problem needs lambda = mean(zeta) > 0");
  if (f.ncomp() != 3) throw std::invalid_argument("forcing must be a vector field");

  NonlinearState s = lifted_state(gp, bc, params);
  if (initial) {
    s.v = project_steady(initial->v), s.pv = project_steady(initial->pv), s.gv = initial->gv;
    s.w = project_oscillatory(initial->w), s.pw = project_oscillatory(initial->pw);
  }
  LinearSubsolver solver(gp, params);
  SolveReport report;
  report.advice = smallness_advisor(params.lambda, cfg.q);
  auto residual = [&](const NonlinearState& st) {
    return nonlinear_residual(st.velocity(), st.pressure(), f, bc, params, cfg.q, st.pressure_gradient()).relative;
  };
  report.initial_residual = residual(s);
  double prev = report.initial_residual;
  int growth = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    s = picard_step(s, f, params, solver, cfg.omega);
    const double r = residual(s);
    if (!std::isfinite(r)) throw PicardError("Picard iteration produced a non-finite residual", report, true);
    report.history.push_back({it, r, prev > 0.0 ? r / prev : 0.0});
    growth = r > prev ? growth + 1 : 0;
    prev = r;
    if (r <= cfg.tolerance) {
      report.v_xoseen = xoseen_norm(s.v, cfg.q, params.lambda);
      report.w_sobolev_q = sobolev_norm_12q(s.w, cfg.q);
      report.w_sobolev_3q = sobolev_norm_12q(s.w, 3.0 * cfg.q / (3.0 - cfg.q));
      return {s.velocity(), s.pressure(), s.pressure_gradient(), s, report};
    }
    if (growth >= 3) {
      std::ostringstream os;
      os << "Picard iteration diverged (residual grew three times in a row, now " << r << "); reduce the data below eps = "
         << report.advice.epsilon << " or increase lambda";
      throw PicardError(os.str(), report, true);
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not reach tolerance " << cfg.tolerance << " in " << cfg.max_iter << " iterations (residual "
     << prev << ")";
  throw PicardError(os.str(), report, false);
}

}  // namespace tpflow
