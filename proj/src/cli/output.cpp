#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "tpflow/cli.hpp"
#include "tpflow/norms.hpp"

namespace tpflow::cli {

std::string sha256_hex(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + file.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["exit_code"] = exit_code;
  auto& c = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) c[k] = v;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"size", f.size}, {"sha256", f.sha256}});
  auto& ph = j["wall_seconds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : phases) ph[k] = v;
  j["errors"] = errors;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> export_vtk(const TpofData& d, const std::filesystem::path& prefix, const std::string& name) {
  if (d.ncomp != 1 && d.ncomp != 3) throw FormatError("ncomp", "VTK export needs 1 or 3 components");
  const std::size_t N = static_cast<std::size_t>(d.nx) * d.ny * d.nz;
  std::vector<std::filesystem::path> out;
  for (std::uint32_t t = 0; t < d.nt; ++t) {
    std::ostringstream fn;
    fn << prefix.string() << "_t" << std::setw(4) << std::setfill('0') << t << ".vtk";
    std::ofstream os(fn.str(), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + fn.str() + "'");
    os << "# vtk DataFile Version 3.0\n"
       << name << " t_index=" << t << " t=" << format_g17(d.period * t / d.nt) << "\n"
       << "ASCII\nDATASET STRUCTURED_POINTS\n"
       << "DIMENSIONS " << d.nx << ' ' << d.ny << ' ' << d.nz << "\n"
       << "ORIGIN 0 0 0\n"
       << "SPACING " << format_g17(d.box_len / d.nx) << ' ' << format_g17(d.box_len / d.ny) << ' '
       << format_g17(d.box_len / d.nz) << "\n"
       << "POINT_DATA " << N << "\n";
    const std::size_t base = static_cast<std::size_t>(t) * d.ncomp * N;
    if (d.ncomp == 1) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (std::size_t i = 0; i < N; ++i) os << format_g17(d.samples[base + i]) << '\n';
    } else {
      os << "VECTORS " << name << " double\n";
      for (std::size_t i = 0; i < N; ++i)
        os << format_g17(d.samples[base + i]) << ' ' << format_g17(d.samples[base + N + i]) << ' '
           << format_g17(d.samples[base + 2 * N + i]) << '\n';
    }
    out.emplace_back(fn.str());
  }
  return out;
}

}  // namespace tpflow::cli
