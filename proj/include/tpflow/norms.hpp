#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tpflow/field.hpp"
#include "tpflow/rational.hpp"

namespace tpflow {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Cells a norm integrates over. `fluid` excludes solid cells; `stencil` additionally
// excludes fluid cells whose difference stencils would read solid values.
enum class Region { fluid, stencil };

struct NormSpec {
  double q = 2.0;
  double r = 0.0;           // 0 when unused
  double r_time = 0.0;      // 0 when unused
  double p_space = 0.0;     // 0 when unused
  double lambda = 0.0;
  void validate() const;
};

// ((1/T) int_0^T int_Omega |f|^q dx dt)^(1/q) by the rectangle rule; q = infinity gives the grid max.
// Vector fields use the Euclidean pointwise magnitude.
double lq_spacetime_norm(const Field& f, double q, Region region = Region::fluid);
// ((1/T) int_0^T ||f(t)||_p^r dt)^(1/r); r == p shares the accumulation of lq_spacetime_norm.
double mixed_rp_norm(const Field& f, double r_time, double p_space, Region region = Region::fluid);
// Space-time norm of a pointwise magnitude taken over all components of all parts
// (e.g. the Frobenius norm of a gradient).
double lq_norm_of_parts(const std::vector<Field>& parts, double q, Region region);
double mixed_rp_norm_of_parts(const std::vector<Field>& parts, double r_time, double p_space, Region region);

// The parts of grad u (d_x u, d_y u, d_z u) and of grad^2 u (d_i d_j u, i <= j).
std::vector<Field> gradient_parts(const Field& u);
std::vector<Field> hessian_parts(const Field& u);

double gradient_norm(const Field& u, double q);
double hessian_norm(const Field& u, double q);

// (sum_{|b|<=1} ||d_t^b u||_q^q + sum_{|a|<=2} ||d_x^a u||_q^q)^(1/q) with the zero-order term counted once.
double sobolev_norm_12q(const Field& u, double q);
// ||grad p||_q + (1/T) int_0^T |int_{Omega_R0} p dx| dt.
double homogeneous_d1q_norm(const Field& p, double q);
// lambda^(1/2)||v||_{2q/(2-q)} + lambda^(1/4)||grad v||_{4q/(4-q)} + lambda||d_1 v||_q + ||grad^2 v||_q.
double xoseen_norm(const Field& v, double q, double lambda);

struct ExponentBound {
  double value = 0.0;  // infinity when unbounded
  bool open = false;   // strict inequality
  bool infinite() const { return value == kInfinity; }
};

struct AdmissibleExponents {
  ExponentBound r0, p0, r1, p1;
};

// Maximal exponents of the embedding W^{1,2,q} -> L^{r0}(L^{p0}), grad -> L^{r1}(L^{p1}) in dimension n.
AdmissibleExponents admissible_exponents(double alpha, double beta, double q, int n = 3);
// Whether (r, p) satisfies the bound pair (and r, p >= q).
bool within_bounds(const ExponentBound& rb, const ExponentBound& pb, double q, double r, double p);

struct ExponentMap {
  Rational r_2q;     // 2q/(2-q)
  Rational r_4q;     // 4q/(4-q)
  Rational r_3q;     // 3q/(3-q)
  Rational theta;    // (10q-12)/q
  Rational lambda_exponent;  // (3q-3)/q
};

ExponentMap exponent_map(Rational q);

struct NormReport {
  std::vector<std::pair<std::string, double>> entries;
  std::string grid_echo;
  void add(std::string label, double value);
  double get(const std::string& label) const;
  std::string to_csv() const;
};

std::string format_g17(double v);

}  // namespace tpflow
