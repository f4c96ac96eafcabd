#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tpflow/nonlinear.hpp"
#include "tpflow/tpof.hpp"
#include "tpflow/verify.hpp"

namespace tpflow::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

struct RunConfig {
  Backend backend = Backend::spectral;
  int nt = 8, nx = 16, ny = 16, nz = 16;
  double box = 1.0;
  double period = 1.0;

  double nu = 1.0;
  double lambda = 0.0;
  double lambda0 = 1.0;
  std::vector<double> zeta_modes;  // a1, b1, a2, b2, ...

  double q = 1.25;
  std::optional<double> r;

  double radius_star = 0.0, radius_zero = 0.0;  // exterior backend only

  PicardConfig picard;

  std::filesystem::path out_dir = "out";
  std::vector<std::string> formats{"tpof", "csv"};

  std::uint64_t seed = 0;

  std::string bc = "zero";  // exterior solves: zero | towed
  std::filesystem::path forcing_file;
  double forcing_scale = 1.0;

  std::string mms_kind;  // empty: chosen from the backend
  double mms_amplitude = 1.0;
  int mms_band = 0, mms_band_t = 1;  // band 0: n/4 on the spectral backend, 1 on the exterior backend
  double mms_r_in = 0.0, mms_r_out = 0.0;
  std::optional<double> mms_tolerance;

  int audit_ensemble = 10;
  int audit_k_max = 4;
  double audit_alpha = 0.5, audit_beta = 0.5;
  int audit_calibration = 20, audit_fresh = 100;
  std::optional<double> audit_s;
  std::vector<double> audit_lambdas{0.25, 0.5, 1.0};

  std::optional<double> wake_radius;

  std::filesystem::path norms_field;
  std::filesystem::path export_field;
  std::string export_prefix = "field";

  // Keys in file order with their raw values and line numbers.
  std::vector<std::pair<std::string, std::string>> echo;
  std::map<std::string, int> lines;

  bool wants(std::string_view format) const;
  GridPtr make_grid() const;
  OseenParams params() const;
  std::vector<double> zeta_profile() const;
};

// Line-based key=value text with '#' comments and dotted keys. Throws ConfigError naming the key and line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 11> kSubcommands{
    "solve-linear", "solve-nonlinear", "mms",  "audit-estimate", "audit-modewise", "audit-embedding",
    "audit-pressure", "audit-nonlinear-term", "wake", "norms", "export-vtk"};

enum ExitCode : int { kOk = 0, kConfigError = 1, kAuditFailure = 2, kDivergence = 3 };

struct FileEntry {
  std::string name;
  std::uintmax_t size = 0;
  std::string sha256;
};

struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<FileEntry> files;
  std::vector<std::pair<std::string, double>> phases;  // wall seconds
  std::vector<std::string> errors;
  int exit_code = kOk;
  std::string to_json() const;
};

std::string sha256_hex(const std::filesystem::path& file);

// Legacy ASCII VTK, one STRUCTURED_POINTS file per time sample: <prefix>_tNNNN.vtk.
std::vector<std::filesystem::path> export_vtk(const TpofData& data, const std::filesystem::path& prefix,
                                              const std::string& name = "field");

// Runs one subcommand, writes its outputs and manifest.json into cfg.out_dir.
RunManifest run(const std::string& subcommand, const RunConfig& cfg);

}  // namespace tpflow::cli
