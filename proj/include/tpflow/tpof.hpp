#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpflow/field.hpp"

namespace tpflow {

// Raw contents of a TPOF file: header plus samples in (t, component, z, y, x) order.
struct TpofData {
  std::uint32_t nt = 0, nx = 0, ny = 0, nz = 0, ncomp = 0;
  double period = 0.0, box_len = 0.0;
  std::vector<double> samples;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& field, const std::string& what)
      : std::runtime_error("TPOF header field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

std::vector<std::uint8_t> encode_tpof(const Field& f);
TpofData decode_tpof(const std::vector<std::uint8_t>& bytes);

void write_tpof(const Field& f, const std::filesystem::path& path);
TpofData read_tpof(const std::filesystem::path& path);
// Field on `grid`; the file header must match the grid shape.
Field tpof_to_field(const TpofData& d, GridPtr grid);

}  // namespace tpflow
