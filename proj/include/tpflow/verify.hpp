#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpflow/nonlinear.hpp"
#include "tpflow/oseen.hpp"

namespace tpflow {

enum class CaseKind { wholespace_linear, exterior_linear, nonlinear };
std::string to_string(CaseKind k);
CaseKind case_kind_from_string(const std::string& s);

// a cos(phase) + b sin(phase), phase = 2 pi (m_t t / T + (m_x x + m_y y + m_z z) / L).
struct TrigTerm {
  std::array<int, 4> m{};
  double a = 0.0, b = 0.0;
};

// Velocity u = curl(chi psi) and pressure chi s_p with closed-form derivatives. chi is a smooth
// radial cut-off around the obstacle centre (zero for r <= r_in, one for r >= r_out); without a
// cut-off chi = 1.
class ManufacturedPotential {
 public:
  struct Cutoff {
    Vec3 center{};
    double r_in = 0.0, r_out = 0.0;
  };
  struct Sample {
    Vec3 u{}, u_t{}, lap_u{};
    std::array<Vec3, 3> grad{};  // grad[j][c] = d_j u_c
    double p = 0.0;
    Vec3 grad_p{};
  };

  ManufacturedPotential(std::array<std::vector<TrigTerm>, 3> psi, std::vector<TrigTerm> pressure, double period,
                        double box_len, std::optional<Cutoff> cutoff);
  Sample eval(double t, const Vec3& x) const;
  std::vector<Sample> eval_times(const Vec3& x, std::span<const double> times) const;

 private:
  std::array<std::vector<TrigTerm>, 3> psi_;
  std::vector<TrigTerm> pressure_;
  double period_, box_len_;
  std::optional<Cutoff> cutoff_;
};

struct ManufacturedOptions {
  int band = 2;      // spatial wavenumbers |m| <= band
  int band_t = 1;    // temporal wavenumbers |m_t| <= band_t
  int terms = 4;     // trigonometric terms per potential component
  double r_in = 0.0;   // cut-off radii; 0 picks R* + 3h and 0.48 L
  double r_out = 0.0;
};

struct ManufacturedCase {
  CaseKind kind{};
  std::uint64_t seed = 0;
  double amplitude = 0.0;
  OseenParams params;
  Field u, p, F;
  std::optional<BoundaryData> bc;  // exterior kinds only
};

// Exact (u, p) from seeded random coefficients and the forcing of the continuous operator:
// linear kinds d_t u - nu Lap u + lambda d1 u + grad p, nonlinear kind adds ((u + zeta e1).grad) u.
ManufacturedCase manufactured_case(CaseKind kind, const GridPtr& grid, const OseenParams& params, std::uint64_t seed,
                                   double amplitude, const ManufacturedOptions& opt = {});

struct MmsResult {
  double velocity_error = 0.0;  // relative discrete L2 over fluid cells
  double pressure_error = 0.0;  // relative discrete L2 over fluid cells
  double residual = 0.0;        // nonlinear kind: final Picard residual
  int iterations = 0;
};
MmsResult run_mms(const ManufacturedCase& mc, const PicardConfig& cfg = {});

// Real band-limited random field: every space-time coefficient with |m_t| <= band_t and
// |m_i| <= band_x is an independent complex normal variate.
Field random_band_limited(const GridPtr& grid, int ncomp, std::uint64_t seed, int band_t, int band_x);
// Divergence-free band-limited random vector field (spectral backend).
Field random_solenoidal(const GridPtr& grid, std::uint64_t seed, int band_t, int band_x);
// Default band n/4 on every axis.
int default_band(int n);

struct AuditRow {
  std::string label;
  double left = 0.0, right = 0.0, fitted_constant = 0.0;
  bool pass = true;
};

struct AuditReport {
  std::string name;
  std::vector<AuditRow> rows;
  double constant = 0.0;  // calibrated constant every row is tested against
  double ratio_min = 0.0, ratio_max = 0.0, ratio_median = 0.0;
  double dispersion = 1.0;  // ratio_max / ratio_min
  std::size_t violations = 0;
  bool pass = true;
  std::vector<std::pair<std::string, double>> extra;

  double get(const std::string& label) const;
  std::string to_csv() const;  // label,left,right,fitted_constant,pass + labelled statistics
};

// ||u||_{1,2,q} + ||grad p||_q against ||F||_q over random oscillatory forcings; pass if dispersion <= 20.
AuditReport audit_linear_estimate(const GridPtr& grid, const OseenParams& params, int ensemble, double q, std::uint64_t seed);
// c_k for k = 1..kmax with one forcing profile of unit L2 norm; pass if max/min <= 4.
AuditReport audit_modewise(const GridPtr& grid, const OseenParams& params, int kmax, std::uint64_t seed);

struct EmbeddingTargets {
  double r0, p0, r1, p1;
};
// Exponents tested for (alpha, beta, q): closed maxima as given, open finite maxima at 0.9x, open infinity as 6q.
EmbeddingTargets embedding_targets(double alpha, double beta, double q);
// Calibrate C = 1.2 max ratio on `calibration` fields, then count violations on `fresh` new fields.
AuditReport audit_embedding(const GridPtr& grid, double q, double alpha, double beta, std::uint64_t seed,
                            int calibration = 20, int fresh = 100);

struct SolvedSample {
  Field u, p, F;
};
// Per time slice: ||p||_{3s/2,R0} vs ||F||_s + ||grad u||_{s,R0} + ||grad u||^{(s-1)/s}_{s,R0} ||grad u||^{1/s}_{1,s,R0}
// and ||grad p||_{s,|x|>rho} vs ||F||_s + ||p||_{s,R0} with rho = R0. Pass if each constant's dispersion <= 20.
AuditReport audit_pressure_local(std::span<const SolvedSample> samples, double s);
AuditReport audit_pressure_ensemble(const GridPtr& grid, const OseenParams& params, int ensemble, double s, std::uint64_t seed);

// ||(v.grad)v||_q / (lambda^{-(3q-3)/q} ||v||_{X^q}^2) for one steady field.
std::pair<double, double> nonlinear_term_sides(const Field& v, double q, double lambda);
// Calibrate on `calibration` fields over all lambdas, check `fresh` fields over all lambdas.
AuditReport audit_nonlinear_term(std::span<const Field> calibration, std::span<const Field> fresh, double q,
                                 std::span<const double> lambdas);
AuditReport audit_nonlinear_term_ensemble(const GridPtr& grid, double q, std::span<const double> lambdas, int ensemble,
                                          std::uint64_t seed);

struct WakeReport {
  double radius = 0.0;
  double downstream = 0.0, upstream = 0.0, lateral = 0.0;
  double ratio = 0.0;  // downstream / upstream
};
// |u| at centre + r e1 (downstream), centre - r e1 and the mean over centre +- r e2, trilinearly interpolated
// from time slice 0.
WakeReport wake_diagnostic(const Field& u_steady, double r);
// Steady flow around the body moving with velocity -lambda e1 (unit speed when lambda = 0, drift disabled).
WakeReport run_wake(const GridPtr& grid, double nu, double lambda, double r);

// Column E e1 of the steady Oseen fundamental solution of -nu Lap u + lambda d1 u + grad p = delta e1.
Vec3 oseen_tensor_e1(double nu, double lambda, const Vec3& x);
double oseen_axis_ratio(double nu, double lambda, double r);

}  // namespace tpflow
