#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "tpflow/cli.hpp"
#include "tpflow/norms.hpp"
#include "tpflow/ops.hpp"

namespace tpflow::cli {

namespace {

namespace fs = std::filesystem;

class AuditFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// label,value rows; values may be signed
class ValueTable {
 public:
  void add(std::string label, double v) { rows_.emplace_back(std::move(label), v); }
  std::string to_csv() const {
    std::ostringstream os;
    os << "label,value\n";
    for (const auto& [k, v] : rows_) os << k << ',' << format_g17(v) << '\n';
    return os.str();
  }

 private:
  std::vector<std::pair<std::string, double>> rows_;
};

class Session {
 public:
  Session(const RunConfig& cfg, RunManifest& m) : cfg_(cfg), m_(m), dir_(cfg.out_dir) { fs::create_directories(dir_); }

  const RunConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }

  void record(const fs::path& p) {
    m_.files.push_back({fs::relative(p, dir_).generic_string(), fs::file_size(p), sha256_hex(p)});
  }
  void text(const std::string& name, const std::string& body) {
    if (!cfg_.wants("csv")) return;
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << body;
    os.close();
    record(p);
  }
  void field(const std::string& stem, const Field& f) {
    if (cfg_.wants("tpof")) {
      const fs::path p = dir_ / (stem + ".tpof");
      write_tpof(f, p);
      record(p);
    }
    if (cfg_.wants("vtk"))
      for (const auto& p : export_vtk(decode_tpof(encode_tpof(f)), dir_ / stem, stem)) record(p);
  }
  template <class Fn>
  auto phase(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Stamp {
      RunManifest& m;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Stamp() { m.phases.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()); }
    } stamp{m_, name, t0};
    return fn();
  }
  RunManifest& manifest() { return m_; }

 private:
  const RunConfig& cfg_;
  RunManifest& m_;
  fs::path dir_;
};

void require_backend(const RunConfig& c, Backend b, const std::string& sub) {
  if (c.backend != b) throw ConfigError(sub + " needs backend=" + to_string(b), "backend", c.lines.at("backend"));
}

Field load_forcing(const RunConfig& c, const GridPtr& g) {
  if (c.forcing_file.empty()) return Field(g, 3);
  const Field f = tpof_to_field(read_tpof(c.forcing_file), g);
  if (f.ncomp() != 3) throw ConfigError("forcing must be a 3-component field", "forcing.file", c.lines.at("forcing.file"));
  return c.forcing_scale * f;
}

BoundaryData boundary(const RunConfig& c, const GridPtr& g, const OseenParams& params) {
  return c.bc == "towed" ? BoundaryData::towed(g, params) : BoundaryData::zero(g);
}

std::string grad_row(const Vec3& g) {
  return "grad_p_mean," + format_g17(g[0]) + ',' + format_g17(g[1]) + ',' + format_g17(g[2]) + '\n';
}

// Per-mode timings belong to the manifest; the CSV stays reproducible.
std::string linear_csv(const LinearSolution& sol, RunManifest& m) {
  std::ostringstream os;
  os << "k,residual,c_k,seconds\n";
  for (const auto& [k, e] : sol.report.modes) {
    os << k << ',' << format_g17(e.residual) << ',' << format_g17(e.c_k) << ",\n";
    m.phases.emplace_back("mode_" + std::to_string(k), e.seconds);
  }
  os << grad_row(sol.grad_p_mean);
  return os.str();
}

void audit_outcome(Session& s, const std::string& file, const AuditReport& r) {
  s.text(file, r.to_csv());
  if (!r.pass) throw AuditFailed(r.name + " audit failed (dispersion " + format_g17(r.dispersion) + ", violations " +
                                 std::to_string(r.violations) + ")");
}

void solve_linear(Session& s) {
  const auto& c = s.cfg();
  const auto g = c.make_grid();
  const auto params = c.params();
  const Field F = load_forcing(c, g);
  const auto sol = s.phase("solve", [&] {
    return c.backend == Backend::spectral ? solve_wholespace_tp_oseen(F, params)
                                          : solve_exterior_tp_oseen(F, boundary(c, g, params), params);
  });
  s.field("u", sol.u);
  s.field("p", sol.p);
  s.text("linear_report.csv", linear_csv(sol, s.manifest()));
}

void solve_nonlinear(Session& s) {
  const auto& c = s.cfg();
  const auto g = c.make_grid();
  const auto params = c.params();
  PicardConfig pc = c.picard;
  pc.q = c.q;
  try {
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), "q", c.lines.count("q") ? c.lines.at("q") : 0);
  }
  const Field f = load_forcing(c, g);
  std::optional<BoundaryData> bc;
  if (c.backend == Backend::exterior) bc = boundary(c, g, params);
  try {
    const auto sol = s.phase("picard", [&] { return picard_solve(f, bc ? &*bc : nullptr, params, pc); });
    s.field("u", sol.u);
    s.field("p", sol.p);
    s.text("solve_report.csv", sol.report.to_csv() + grad_row(sol.grad_p_mean));
  } catch (const PicardError& e) {
    s.text("solve_report.csv", e.report().to_csv());
    throw;
  }
}

void mms(Session& s) {
  const auto& c = s.cfg();
  const auto g = c.make_grid();
  const auto params = c.params();
  const CaseKind kind = !c.mms_kind.empty()            ? case_kind_from_string(c.mms_kind)
                        : c.backend == Backend::spectral ? CaseKind::wholespace_linear
                                                         : CaseKind::exterior_linear;
  ManufacturedOptions opt;
  opt.band = c.mms_band > 0 ? c.mms_band : (c.backend == Backend::spectral ? default_band(std::min({c.nx, c.ny, c.nz})) : 1);
  opt.band_t = c.mms_band_t;
  opt.r_in = c.mms_r_in;
  opt.r_out = c.mms_r_out;
  const auto mc = manufactured_case(kind, g, params, c.seed, c.mms_amplitude, opt);
  PicardConfig pc = c.picard;
  pc.q = c.q;
  const auto r = s.phase("solve", [&] { return run_mms(mc, pc); });
  ValueTable t;
  t.add("velocity_error", r.velocity_error);
  t.add("pressure_error", r.pressure_error);
  if (kind == CaseKind::nonlinear) {
    t.add("residual", r.residual);
    t.add("iterations", r.iterations);
  }
  const double tol = c.mms_tolerance.value_or(kind == CaseKind::wholespace_linear ? 1e-10 : kInfinity);
  if (tol != kInfinity) t.add("tolerance", tol);
  s.field("u_exact", mc.u);
  s.field("p_exact", mc.p);
  s.field("forcing", mc.F);
  s.text("mms_report.csv", t.to_csv());
  if (!(r.velocity_error < tol)) throw AuditFailed("manufactured solution error " + format_g17(r.velocity_error) + " above " + format_g17(tol));
}

void audit_estimate(Session& s) {
  const auto& c = s.cfg();
  const auto r = s.phase("audit", [&] { return audit_linear_estimate(c.make_grid(), c.params(), c.audit_ensemble, c.q, c.seed); });
  audit_outcome(s, "audit_estimate.csv", r);
}

void audit_modewise_cmd(Session& s) {
  const auto& c = s.cfg();
  const auto r = s.phase("audit", [&] { return audit_modewise(c.make_grid(), c.params(), c.audit_k_max, c.seed); });
  audit_outcome(s, "audit_modewise.csv", r);
}

void audit_embedding_cmd(Session& s) {
  const auto& c = s.cfg();
  try {
    embedding_targets(c.audit_alpha, c.audit_beta, c.q);
  } catch (const std::invalid_argument& e) {
    const std::string key = std::string(e.what()).rfind("beta", 0) == 0 ? "audit.beta" : std::string(e.what()).rfind("q", 0) == 0 ? "q" : "audit.alpha";
    throw ConfigError(std::string("embedding exponent table: ") + e.what(), key, c.lines.count(key) ? c.lines.at(key) : 0);
  }
  const auto r = s.phase("audit", [&] {
    return audit_embedding(c.make_grid(), c.q, c.audit_alpha, c.audit_beta, c.seed, c.audit_calibration, c.audit_fresh);
  });
  audit_outcome(s, "audit_embedding.csv", r);
}

void audit_pressure_cmd(Session& s) {
  const auto& c = s.cfg();
  require_backend(c, Backend::exterior, "audit-pressure");
  const auto r = s.phase("audit", [&] {
    return audit_pressure_ensemble(c.make_grid(), c.params(), c.audit_ensemble, c.audit_s.value_or(c.q), c.seed);
  });
  audit_outcome(s, "audit_pressure.csv", r);
}

void audit_nonlinear_cmd(Session& s) {
  const auto& c = s.cfg();
  require_backend(c, Backend::spectral, "audit-nonlinear-term");
  const auto r = s.phase("audit", [&] {
    return audit_nonlinear_term_ensemble(c.make_grid(), c.q, c.audit_lambdas, c.audit_ensemble, c.seed);
  });
  audit_outcome(s, "audit_nonlinear_term.csv", r);
}

void wake(Session& s) {
  const auto& c = s.cfg();
  require_backend(c, Backend::exterior, "wake");
  const double r = c.wake_radius.value_or(c.box / 3.0);
  const auto w = s.phase("solve", [&] { return run_wake(c.make_grid(), c.nu, c.lambda, r); });
  ValueTable t;
  t.add("radius", w.radius);
  t.add("downstream", w.downstream);
  t.add("upstream", w.upstream);
  t.add("lateral", w.lateral);
  t.add("ratio", w.ratio);
  if (c.lambda > 0.0) t.add("oseen_tensor_ratio", oseen_axis_ratio(c.nu, c.lambda, r));
  s.text("wake_report.csv", t.to_csv());
}

void norms(Session& s) {
  const auto& c = s.cfg();
  if (c.norms_field.empty()) throw ConfigError("is required for the norms subcommand", "norms.field");
  const Field f = tpof_to_field(read_tpof(c.norms_field), c.make_grid());
  NormReport r;
  r.grid_echo = std::to_string(c.nt) + "x" + std::to_string(c.nx) + "x" + std::to_string(c.ny) + "x" + std::to_string(c.nz);
  r.add("lq", lq_spacetime_norm(f, c.q));
  r.add("l2", lq_spacetime_norm(f, 2.0));
  r.add("linf", lq_spacetime_norm(f, kInfinity));
  if (c.r) r.add("mixed_rq", mixed_rp_norm(f, *c.r, c.q));
  r.add("gradient_q", gradient_norm(f, c.q));
  r.add("hessian_q", hessian_norm(f, c.q));
  r.add("sobolev_12q", sobolev_norm_12q(f, c.q));
  if (f.ncomp() == 1) r.add("homogeneous_d1q", homogeneous_d1q_norm(f, c.q));
  if (f.ncomp() == 3 && c.lambda > 0.0 && c.q < 2.0) r.add("xoseen", xoseen_norm(project_steady(f), c.q, c.lambda));
  s.text("norms.csv", r.to_csv());
}

void export_cmd(Session& s) {
  const auto& c = s.cfg();
  if (c.export_field.empty()) throw ConfigError("is required for the export-vtk subcommand", "export.field");
  const auto d = read_tpof(c.export_field);
  for (const auto& p : export_vtk(d, s.dir() / c.export_prefix, c.export_prefix)) s.record(p);
}

}  // namespace

RunManifest run(const std::string& subcommand, const RunConfig& cfg) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config = cfg.echo;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    Session s(cfg, m);
    if (subcommand == "solve-linear") solve_linear(s);
    else if (subcommand == "solve-nonlinear") solve_nonlinear(s);
    else if (subcommand == "mms") mms(s);
    else if (subcommand == "audit-estimate") audit_estimate(s);
    else if (subcommand == "audit-modewise") audit_modewise_cmd(s);
    else if (subcommand == "audit-embedding") audit_embedding_cmd(s);
    else if (subcommand == "audit-pressure") audit_pressure_cmd(s);
    else if (subcommand == "audit-nonlinear-term") audit_nonlinear_cmd(s);
    else if (subcommand == "wake") wake(s);
    else if (subcommand == "norms") norms(s);
    else export_cmd(s);
  } catch (const AuditFailed& e) {
    m.exit_code = kAuditFailure;
    m.errors.emplace_back(e.what());
  } catch (const PicardError& e) {
    m.exit_code = kDivergence;
    m.errors.emplace_back(e.what());
  } catch (const SolverError& e) {
    m.exit_code = kDivergence;
    m.errors.emplace_back(e.what());
  } catch (const std::exception& e) {
    m.exit_code = kConfigError;
    m.errors.emplace_back(e.what());
  }
  m.phases.emplace_back("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  try {
    fs::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir / "manifest.json", std::ios::binary);
    os << m.to_json();
  } catch (const std::exception&) {
    if (m.exit_code == kOk) m.exit_code = kConfigError;
  }
  return m;
}

}  // namespace tpflow::cli
