#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tpflow/cli.hpp"

int main(int argc, char** argv) {
  using namespace tpflow::cli;
  CLI::App app{"Time-periodic Oseen and Navier-Stokes flow solver and audit runner"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  for (auto name : kSubcommands) {
    auto* sub = app.add_subcommand(std::string(name));
    sub->add_option("--config", config_path, "configuration file (key=value lines)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides io.out)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "tpflow: " << config_path << ": " << e.what() << '\n';
    RunManifest m;
    m.subcommand = subcommand;
    m.exit_code = kConfigError;
    m.errors.emplace_back(e.what());
    if (!out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      std::ofstream(std::filesystem::path(out_dir) / "manifest.json") << m.to_json();
    }
    return kConfigError;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (sub->count("--seed") > 0) {
    cfg.seed = seed;
    cfg.echo.emplace_back("seed", std::to_string(seed));
  }
  const auto m = run(subcommand, cfg);
  for (const auto& e : m.errors) std::cerr << "tpflow: " << e << '\n';
  for (const auto& f : m.files) std::cout << f.name << ' ' << f.size << ' ' << f.sha256 << '\n';
  return m.exit_code;
}
