#include "tpflow/tpof.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tpflow {
namespace {

constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(b), std::end(b));
  out.insert(out.end(), std::begin(b), std::end(b));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* field) {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError(field, "file truncated");
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(b), std::end(b));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tpof(const Field& f) {
  const auto& g = f.grid();
  std::vector<std::uint8_t> out;
  out.reserve(4 + 6 * 4 + 16 + f.size() * 8);
  out.insert(out.end(), {'T', 'P', 'O', 'F'});
  put<std::uint32_t>(out, kVersion);
  for (int v : {g.nt(), g.nx(), g.ny(), g.nz(), f.ncomp()}) put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  put<double>(out, g.period());
  put<double>(out, g.box_len());
  for (double v : f.samples()) put<double>(out, v);
  return out;
}

TpofData decode_tpof(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TPOF", 4) != 0) throw FormatError("magic", "expected 'TPOF'");
  r.skip(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw FormatError("version", "unsupported version " + std::to_string(version));
  TpofData d;
  d.nt = r.get<std::uint32_t>("n_t");
  d.nx = r.get<std::uint32_t>("n_x");
  d.ny = r.get<std::uint32_t>("n_y");
  d.nz = r.get<std::uint32_t>("n_z");
  d.ncomp = r.get<std::uint32_t>("ncomp");
  if (d.nt == 0) throw FormatError("n_t", "must be positive");
  if (d.nx == 0) throw FormatError("n_x", "must be positive");
  if (d.ny == 0) throw FormatError("n_y", "must be positive");
  if (d.nz == 0) throw FormatError("n_z", "must be positive");
  if (d.ncomp != 1 && d.ncomp != 3) throw FormatError("ncomp", "must be 1 or 3");
  d.period = r.get<double>("T");
  if (!(d.period > 0.0) || !std::isfinite(d.period)) throw FormatError("T", "must be a positive finite number");
  d.box_len = r.get<double>("L");
  if (!(d.box_len > 0.0) || !std::isfinite(d.box_len)) throw FormatError("L", "must be a positive finite number");
  const std::size_t count = static_cast<std::size_t>(d.nt) * d.nx * d.ny * d.nz * d.ncomp;
  if (r.remaining() != count * 8)
    throw FormatError("samples", "expected " + std::to_string(count) + " samples, found " +
                                     std::to_string(r.remaining()) + " bytes");
  d.samples.resize(count);
  for (auto& v : d.samples) v = r.get<double>("samples");
  return d;
}

void write_tpof(const Field& f, const std::filesystem::path& path) {
  const auto bytes = encode_tpof(f);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

TpofData read_tpof(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_tpof(bytes);
}

Field tpof_to_field(const TpofData& d, GridPtr grid) {
  if (static_cast<int>(d.nt) != grid->nt()) throw FormatError("n_t", "does not match the grid");
  if (static_cast<int>(d.nx) != grid->nx()) throw FormatError("n_x", "does not match the grid");
  if (static_cast<int>(d.ny) != grid->ny()) throw FormatError("n_y", "does not match the grid");
  if (static_cast<int>(d.nz) != grid->nz()) throw FormatError("n_z", "does not match the grid");
  return Field(std::move(grid), static_cast<int>(d.ncomp), d.samples);
}

}  // namespace tpflow
