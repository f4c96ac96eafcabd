#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "tpflow/cli.hpp"

namespace tpflow::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

struct Parser {
  RunConfig& cfg;
  std::string key;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, key, line); }

  double real(const std::string& v) const {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end || !std::isfinite(x)) fail("'" + v + "' is not a finite number");
    return x;
  }
  long long integer(const std::string& v) const {
    long long x = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) fail("'" + v + "' is not an integer");
    return x;
  }
  std::vector<double> reals(const std::string& v) const {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(real(item));
    return out;
  }
};

using Setter = std::function<void(Parser&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["backend"] = [](Parser& p, const std::string& v) {
      try {
        p.cfg.backend = backend_from_string(v);
      } catch (const std::exception&) {
        p.fail("must be 'spectral' or 'exterior'");
      }
    };
    auto intkey = [](int RunConfig::*m) { return [m](Parser& p, const std::string& v) { p.cfg.*m = static_cast<int>(p.integer(v)); }; };
    auto realkey = [](double RunConfig::*m) { return [m](Parser& p, const std::string& v) { p.cfg.*m = p.real(v); }; };
    t["grid.nt"] = intkey(&RunConfig::nt);
    t["grid.nx"] = intkey(&RunConfig::nx);
    t["grid.ny"] = intkey(&RunConfig::ny);
    t["grid.nz"] = intkey(&RunConfig::nz);
    t["grid.n"] = [](Parser& p, const std::string& v) { p.cfg.nx = p.cfg.ny = p.cfg.nz = static_cast<int>(p.integer(v)); };
    t["grid.box"] = realkey(&RunConfig::box);
    t["period"] = realkey(&RunConfig::period);
    t["nu"] = realkey(&RunConfig::nu);
    t["lambda"] = realkey(&RunConfig::lambda);
    t["lambda0"] = realkey(&RunConfig::lambda0);
    t["zeta"] = [](Parser& p, const std::string& v) {
      auto z = p.reals(v);
      if (z.empty() || z.size() % 2 == 0) p.fail("expects lambda followed by cos/sin amplitude pairs");
      p.cfg.lambda = z.front();
      p.cfg.zeta_modes.assign(z.begin() + 1, z.end());
    };
    t["q"] = realkey(&RunConfig::q);
    t["r"] = [](Parser& p, const std::string& v) { p.cfg.r = p.real(v); };
    t["obstacle.radius_star"] = realkey(&RunConfig::radius_star);
    t["obstacle.radius_zero"] = realkey(&RunConfig::radius_zero);
    t["picard.tol"] = [](Parser& p, const std::string& v) { p.cfg.picard.tolerance = p.real(v); };
    t["picard.max_iter"] = [](Parser& p, const std::string& v) { p.cfg.picard.max_iter = static_cast<int>(p.integer(v)); };
    t["picard.omega"] = [](Parser& p, const std::string& v) { p.cfg.picard.omega = p.real(v); };
    t["io.out"] = [](Parser& p, const std::string& v) {
      if (v.empty()) p.fail("must name a directory");
      p.cfg.out_dir = v;
    };
    t["io.formats"] = [](Parser& p, const std::string& v) {
      p.cfg.formats = split(v, ',');
      for (const auto& f : p.cfg.formats)
        if (f != "tpof" && f != "csv" && f != "vtk") p.fail("unknown format '" + f + "' (tpof, csv, vtk)");
    };
    t["seed"] = [](Parser& p, const std::string& v) {
      std::uint64_t s = 0;
      const auto* end = v.data() + v.size();
      const auto [q, ec] = std::from_chars(v.data(), end, s);
      if (ec != std::errc() || q != end) p.fail("'" + v + "' is not an unsigned 64-bit integer");
      p.cfg.seed = s;
    };
    t["bc"] = [](Parser& p, const std::string& v) {
      if (v != "towed" && v != "zero") p.fail("must be 'towed' or 'zero'");
      p.cfg.bc = v;
    };
    t["forcing.file"] = [](Parser& p, const std::string& v) { p.cfg.forcing_file = v; };
    t["forcing.scale"] = realkey(&RunConfig::forcing_scale);
    t["mms.kind"] = [](Parser& p, const std::string& v) {
      try {
        case_kind_from_string(v);
      } catch (const std::exception&) {
        p.fail("must be wholespace-linear, exterior-linear or nonlinear");
      }
      p.cfg.mms_kind = v;
    };
    t["mms.amplitude"] = realkey(&RunConfig::mms_amplitude);
    t["mms.band"] = intkey(&RunConfig::mms_band);
    t["mms.band_t"] = intkey(&RunConfig::mms_band_t);
    t["mms.r_in"] = realkey(&RunConfig::mms_r_in);
    t["mms.r_out"] = realkey(&RunConfig::mms_r_out);
    t["mms.tolerance"] = [](Parser& p, const std::string& v) { p.cfg.mms_tolerance = p.real(v); };
    t["audit.ensemble"] = intkey(&RunConfig::audit_ensemble);
    t["audit.k_max"] = intkey(&RunConfig::audit_k_max);
    t["audit.alpha"] = realkey(&RunConfig::audit_alpha);
    t["audit.beta"] = realkey(&RunConfig::audit_beta);
    t["audit.calibration"] = intkey(&RunConfig::audit_calibration);
    t["audit.fresh"] = intkey(&RunConfig::audit_fresh);
    t["audit.s"] = [](Parser& p, const std::string& v) { p.cfg.audit_s = p.real(v); };
    t["audit.lambdas"] = [](Parser& p, const std::string& v) { p.cfg.audit_lambdas = p.reals(v); };
    t["wake.radius"] = [](Parser& p, const std::string& v) { p.cfg.wake_radius = p.real(v); };
    t["norms.field"] = [](Parser& p, const std::string& v) { p.cfg.norms_field = v; };
    t["export.field"] = [](Parser& p, const std::string& v) { p.cfg.export_field = v; };
    t["export.prefix"] = [](Parser& p, const std::string& v) {
      if (v.empty()) p.fail("must not be empty");
      p.cfg.export_prefix = v;
    };
    return t;
  }();
  return table;
}

void validate(const RunConfig& c) {
  auto line_of = [&](const std::string& k) {
    const auto it = c.lines.find(k);
    return it == c.lines.end() ? 0 : it->second;
  };
  auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(what, key, line_of(key));
  };
  auto given = [&](const std::string& k) { return c.lines.count(k) > 0; };

  check(given("backend"), "backend", "is required");
  check(given("grid.nt"), "grid.nt", "is required");
  check(given("grid.n") || (given("grid.nx") && given("grid.ny") && given("grid.nz")), "grid.n",
        "is required (or grid.nx, grid.ny and grid.nz)");
  check(given("grid.box"), "grid.box", "is required");
  check(given("period"), "period", "is required");
  check(given("nu"), "nu", "is required");
  check(given("lambda") || given("zeta"), "lambda", "is required (or zeta)");
  check(!(given("lambda") && given("zeta")), "zeta", "conflicts with lambda; zeta already sets the mean");

  check(c.nt >= 2 && c.nt % 2 == 0, "grid.nt", "must be an even number of at least 2");
  const std::string nkey = given("grid.n") ? "grid.n" : "grid.nx";
  check(c.nx >= 4 && c.ny >= 4 && c.nz >= 4, nkey, "must be at least 4");
  check(c.box > 0.0, "grid.box", "must be positive");
  check(c.period > 0.0, "period", "must be positive");
  check(c.nu > 0.0, "nu", "must be positive");
  const std::string lkey = given("zeta") ? "zeta" : "lambda";
  check(c.lambda >= 0.0, lkey, "must be nonnegative");
  check(c.lambda0 > 0.0, "lambda0", "must be positive");
  check(c.lambda <= c.lambda0, lkey, "must not exceed lambda0");
  check(static_cast<int>(c.zeta_modes.size() / 2) < c.nt / 2, "zeta", "has modes at or above the temporal Nyquist index");
  check(c.q > 1.0, "q", "must exceed 1");
  if (c.r) check(*c.r >= 1.0, "r", "must be at least 1");

  if (c.backend == Backend::exterior) {
    const double rs = given("obstacle.radius_star") ? c.radius_star : 0.15 * c.box;
    const double r0 = given("obstacle.radius_zero") ? c.radius_zero : 2.0 * rs;
    check(rs > 0.0, "obstacle.radius_star", "must be positive");
    check(r0 > rs, "obstacle.radius_zero", "must exceed obstacle.radius_star");
    check(r0 < 0.5 * c.box, "obstacle.radius_zero", "must be below half the box length");
  } else {
    check(!given("obstacle.radius_star"), "obstacle.radius_star", "is only valid with backend=exterior");
    check(!given("obstacle.radius_zero"), "obstacle.radius_zero", "is only valid with backend=exterior");
    check(!given("bc"), "bc", "is only valid with backend=exterior");
  }

  check(c.picard.tolerance > 0.0, "picard.tol", "must be positive");
  check(c.picard.max_iter >= 1, "picard.max_iter", "must be at least 1");
  check(c.picard.omega > 0.0 && c.picard.omega <= 1.0, "picard.omega", "must lie in (0, 1]");
  check(c.forcing_scale >= 0.0 || !given("forcing.scale"), "forcing.scale", "must be nonnegative");

  check(c.mms_amplitude >= 0.0, "mms.amplitude", "must be nonnegative");
  check(c.mms_band >= 0, "mms.band", "must be nonnegative");
  check(c.mms_band_t >= 0, "mms.band_t", "must be nonnegative");
  check(c.mms_r_in >= 0.0, "mms.r_in", "must be nonnegative");
  check(c.mms_r_out >= 0.0, "mms.r_out", "must be nonnegative");
  if (c.mms_tolerance) check(*c.mms_tolerance > 0.0, "mms.tolerance", "must be positive");

  check(c.audit_ensemble >= 1, "audit.ensemble", "must be at least 1");
  check(c.audit_k_max >= 1, "audit.k_max", "must be at least 1");
  check(c.audit_calibration >= 1, "audit.calibration", "must be at least 1");
  check(c.audit_fresh >= 0, "audit.fresh", "must be nonnegative");
  if (c.audit_s) check(*c.audit_s > 1.0, "audit.s", "must exceed 1");
  check(!c.audit_lambdas.empty(), "audit.lambdas", "must not be empty");
  for (double l : c.audit_lambdas) check(l > 0.0, "audit.lambdas", "entries must be positive");
  if (c.wake_radius) check(*c.wake_radius > 0.0, "wake.radius", "must be positive");
}

}  // namespace

ConfigError::ConfigError(const std::string& what, std::string key, int line)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + (key.empty() ? "" : key + ": ") + what),
      key_(std::move(key)),
      line_(line) {}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  Parser p{cfg, {}, 0};
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++p.line;
    p.key.clear();
    const std::string body = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + body + "'", {}, p.line);
    p.key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (p.key.empty()) throw ConfigError("missing key before '='", {}, p.line);
    const auto it = setters().find(p.key);
    if (it == setters().end()) p.fail("unknown key");
    if (cfg.lines.count(p.key)) p.fail("duplicate key (first set on line " + std::to_string(cfg.lines[p.key]) + ")");
    it->second(p, value);
    cfg.lines[p.key] = p.line;
    cfg.echo.emplace_back(p.key, value);
  }
  validate(cfg);
  if (cfg.backend == Backend::exterior) {
    if (!cfg.lines.count("obstacle.radius_star")) cfg.radius_star = 0.15 * cfg.box;
    if (!cfg.lines.count("obstacle.radius_zero")) cfg.radius_zero = 2.0 * cfg.radius_star;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

bool RunConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

GridPtr RunConfig::make_grid() const {
  std::optional<ObstacleGeometry> ob;
  if (backend == Backend::exterior) ob = ObstacleGeometry{radius_star, radius_zero};
  return PeriodicGrid::make(period, nt, nx, ny, nz, box, backend, ob);
}

std::vector<double> RunConfig::zeta_profile() const {
  std::vector<double> z(static_cast<std::size_t>(nt), lambda);
  for (std::size_t m = 0; 2 * m + 1 < zeta_modes.size(); ++m)
    for (int t = 0; t < nt; ++t) {
      const double ph = 2.0 * std::numbers::pi * static_cast<double>(m + 1) * t / nt;
      z[static_cast<std::size_t>(t)] += zeta_modes[2 * m] * std::cos(ph) + zeta_modes[2 * m + 1] * std::sin(ph);
    }
  return z;
}

OseenParams RunConfig::params() const { return OseenParams::make(nu, zeta_profile(), lambda0); }

}  // namespace tpflow::cli
