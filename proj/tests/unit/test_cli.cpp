#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tpflow/cli.hpp"

using namespace tpflow;
using namespace tpflow::cli;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal =
    "backend=spectral\n"
    "grid.nt=4\n"
    "grid.n=8\n"
    "grid.box=6.283185307179586\n"
    "period=1\n"
    "nu=1\n"
    "lambda=0.5\n";

const std::string kExterior =
    "backend=exterior\n"
    "grid.nt=4\n"
    "grid.n=12\n"
    "grid.box=4\n"
    "period=1\n"
    "nu=1\n"
    "lambda=0.5\n"
    "obstacle.radius_star=0.6\n"
    "obstacle.radius_zero=1.2\n";

fs::path scratch(const std::string& name) {
  static const auto base = fs::temp_directory_path() / ("tpflow_cli_" + std::to_string(std::random_device{}()));
  const auto p = base / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig with_out(const std::string& text, const fs::path& out) {
  auto c = parse_config(text);
  c.out_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("minimal configuration takes documented defaults") {
  const auto c = parse_config("# comment line\n" + kMinimal + "  # trailing\n");
  CHECK(c.backend == Backend::spectral);
  CHECK(c.nt == 4);
  CHECK(c.nx == 8);
  CHECK(c.nz == 8);
  CHECK(c.lambda == 0.5);
  CHECK(c.q == 1.25);
  CHECK(c.picard.tolerance == 1e-8);
  CHECK(c.picard.max_iter == 20);
  CHECK(c.picard.omega == 1.0);
  CHECK(c.seed == 0);
  CHECK(c.wants("tpof"));
  CHECK(c.wants("csv"));
  CHECK(!c.wants("vtk"));
  CHECK(c.echo.size() == 7);
  const auto p = c.params();
  CHECK(p.lambda == doctest::Approx(0.5));
}

TEST_CASE("configuration errors name key and line") {
  CHECK(error_key(kMinimal + "lambda0=0.1\n") == "lambda");
  CHECK(error_key("backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nlambda=-1\n") == "lambda");
  CHECK(error_line("backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nlambda=-1\n") == 7);
  CHECK(error_key(kMinimal + "lamda=1\n") == "lamda");
  CHECK(error_line(kMinimal + "lamda=1\n") == 8);
  CHECK(error_line(kMinimal + "no equals sign\n") == 8);
  CHECK(error_key(kMinimal + "nu=2\n") == "nu");  // duplicate
  CHECK(error_key(kMinimal + "picard.omega=1.5\n") == "picard.omega");
  CHECK(error_key(kMinimal + "q=abc\n") == "q");
  CHECK(error_key(kMinimal + "io.formats=tpof,png\n") == "io.formats");
  CHECK(error_key(kMinimal + "obstacle.radius_star=0.1\n") == "obstacle.radius_star");
  CHECK(error_key("backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=1\nperiod=1\nlambda=1\n") == "nu");
  CHECK(error_key("backend=spectral\ngrid.nt=3\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nlambda=1\n") == "grid.nt");
  CHECK(error_key(kExterior + "seed=-4\n") == "seed");
  CHECK(error_key(kMinimal + "zeta=0.5,0.1,0.2\n") == "zeta");  // conflicts with lambda
}

TEST_CASE("zeta profile sets the mean and the harmonics") {
  const std::string text = "backend=spectral\ngrid.nt=8\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nzeta=0.5,0.1,0.2\n";
  const auto c = parse_config(text);
  CHECK(c.lambda == 0.5);
  const auto z = c.zeta_profile();
  REQUIRE(z.size() == 8);
  CHECK(z[0] == doctest::Approx(0.6));
  CHECK(z[2] == doctest::Approx(0.7));
  CHECK(error_key("backend=spectral\ngrid.nt=8\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nzeta=0.5,0.1\n") == "zeta");
  CHECK(error_key("backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=1\nperiod=1\nnu=1\nzeta=0.5,0,0,0.1,0\n") == "zeta");
}

TEST_CASE("exterior defaults and nonlinear exponent window") {
  const auto c = parse_config("backend=exterior\ngrid.nt=4\ngrid.n=12\ngrid.box=4\nperiod=1\nnu=1\nlambda=0.5\n");
  CHECK(c.radius_star == doctest::Approx(0.6));
  CHECK(c.radius_zero == doctest::Approx(1.2));
  const auto q = parse_config(kExterior + "q=1.25\n");
  CHECK(q.q == 1.25);
  CHECK(error_key(kExterior + "obstacle.radius_zero=0.5\n") == "obstacle.radius_zero");
}

TEST_CASE("solve-linear with zero forcing writes zero fields") {
  const auto out = scratch("linear");
  const auto m = run("solve-linear", with_out(kMinimal, out));
  CHECK(m.exit_code == kOk);
  REQUIRE(m.files.size() == 3);
  CHECK(m.files[0].name == "u.tpof");
  CHECK(m.files[1].name == "p.tpof");
  CHECK(m.files[2].name == "linear_report.csv");
  const auto u = read_tpof(out / "u.tpof");
  CHECK(std::all_of(u.samples.begin(), u.samples.end(), [](double v) { return v == 0.0; }));
  for (const auto& f : m.files) {
    CHECK(fs::exists(out / f.name));
    CHECK(sha256_hex(out / f.name) == f.sha256);
    CHECK(fs::file_size(out / f.name) == f.size);
  }
  CHECK(slurp(out / "linear_report.csv").rfind("k,residual,c_k,seconds\n", 0) == 0);
  const auto manifest = slurp(out / "manifest.json");
  CHECK(manifest.find("\"exit_code\": 0") != std::string::npos);
  CHECK(manifest.find("u.tpof") != std::string::npos);
}

TEST_CASE("spectral mms meets its tolerance") {
  const auto out = scratch("mms");
  const auto m = run("mms", with_out(kMinimal, out));
  CHECK(m.exit_code == kOk);
  const auto csv = slurp(out / "mms_report.csv");
  const auto pos = csv.find("velocity_error,");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(csv.substr(pos + 15)) < 1e-10);

  auto strict = with_out(kMinimal + "mms.tolerance=1e-30\n", scratch("mms_strict"));
  CHECK(run("mms", strict).exit_code == kAuditFailure);
}

TEST_CASE("exit statuses") {
  CHECK(run("audit-embedding", with_out(kMinimal + "audit.alpha=3\n", scratch("emb"))).exit_code == kConfigError);
  const auto m = run("audit-embedding", with_out(kMinimal + "audit.alpha=3\n", scratch("emb2")));
  REQUIRE(!m.errors.empty());
  CHECK(m.errors[0].find("alpha must lie in [0, 2]") != std::string::npos);
  CHECK(run("bogus", with_out(kMinimal, scratch("bogus"))).exit_code == kConfigError);
  CHECK(run("wake", with_out(kMinimal, scratch("wake_spec"))).exit_code == kConfigError);
  CHECK(run("norms", with_out(kMinimal, scratch("norms_missing"))).exit_code == kConfigError);

  // strong forcing at low viscosity: Picard diverges
  const auto dir = scratch("diverge");
  {
    auto c = with_out(kMinimal, dir);
    const auto g = c.make_grid();
    const Field f = Field::generate(g, 3, [&](int t, int comp, std::size_t cell) {
      const auto x = g->position(cell);
      const double s = std::sin(x[(comp + 1) % 3]) * (1.0 + std::cos(2.0 * std::numbers::pi * t / g->nt()));
      return 400.0 * s;
    });
    write_tpof(f, dir / "f.tpof");
  }
  const std::string div = "backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=6.283185307179586\nperiod=1\nnu=0.02\nlambda=0.25\n"
                          "picard.max_iter=12\nforcing.file=" + (dir / "f.tpof").string() + "\n";
  const auto dm = run("solve-nonlinear", with_out(div, dir / "run"));
  CHECK(dm.exit_code == kDivergence);
  CHECK(fs::exists(dir / "run" / "solve_report.csv"));
  CHECK(fs::exists(dir / "run" / "manifest.json"));

  const std::string bad_q = kExterior + "q=1.5\n";
  CHECK(run("solve-nonlinear", with_out(bad_q, scratch("badq"))).exit_code == kConfigError);
}

TEST_CASE("identical runs are bit-identical") {
  const std::string text = kExterior + "bc=towed\nseed=5\n";
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ma = run("solve-nonlinear", with_out(text, a));
  const auto mb = run("solve-nonlinear", with_out(text, b));
  REQUIRE(ma.exit_code == kOk);
  REQUIRE(ma.files.size() == mb.files.size());
  for (std::size_t i = 0; i < ma.files.size(); ++i) {
    CHECK(ma.files[i].name == mb.files[i].name);
    CHECK(ma.files[i].sha256 == mb.files[i].sha256);
  }
  const auto ra = run("audit-estimate", with_out(kMinimal + "audit.ensemble=3\n", scratch("det_c")));
  const auto rb = run("audit-estimate", with_out(kMinimal + "audit.ensemble=3\n", scratch("det_d")));
  CHECK(ra.exit_code == kOk);
  CHECK(ra.files.at(0).sha256 == rb.files.at(0).sha256);
}

TEST_CASE("VTK export writes one file per time sample") {
  const auto dir = scratch("vtk");
  const auto g = parse_config(kMinimal).make_grid();
  const Field s = Field::generate(g, 1, [](int t, int, std::size_t cell) { return t + 0.001 * static_cast<double>(cell); });
  write_tpof(s, dir / "s.tpof");
  const auto d = read_tpof(dir / "s.tpof");
  const auto files = export_vtk(d, dir / "s", "s");
  REQUIRE(files.size() == 4);
  CHECK(files[0].filename() == "s_t0000.vtk");
  CHECK(files[3].filename() == "s_t0003.vtk");
  const auto body = slurp(files[1]);
  CHECK(body.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(body.find("DATASET STRUCTURED_POINTS\nDIMENSIONS 8 8 8\nORIGIN 0 0 0\n") != std::string::npos);
  CHECK(body.find("SCALARS s double 1") != std::string::npos);
  CHECK(body.find("POINT_DATA 512") != std::string::npos);

  const Field v(g, 3);
  write_tpof(v, dir / "v.tpof");
  const auto vf = export_vtk(read_tpof(dir / "v.tpof"), dir / "v", "v");
  CHECK(slurp(vf[0]).find("VECTORS v double") != std::string::npos);

  // round trip
  const auto again = encode_tpof(tpof_to_field(d, g));
  CHECK(again == encode_tpof(s));

  std::ofstream(dir / "bad.tpof", std::ios::binary) << "TPOF";
  CHECK_THROWS_AS(read_tpof(dir / "bad.tpof"), FormatError);
  const auto cfg = with_out(kMinimal + "export.field=" + (dir / "bad.tpof").string() + "\n", dir / "out");
  CHECK(run("export-vtk", cfg).exit_code == kConfigError);
}
