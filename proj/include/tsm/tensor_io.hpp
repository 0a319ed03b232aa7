#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tsm/tensor.hpp"

namespace tsm {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// TSTF layout, all integers little-endian:
//   "TSTF" | u32 version (1) | u8 dtype (0 = f32) | u8 ndim |
//   ndim x u64 dims | row-major f32 payload
inline constexpr std::uint32_t kTstfVersion = 1;

void write_tstf(std::ostream& os, const Tensor& t);
Tensor read_tstf(std::istream& is);
void save_tstf(const std::filesystem::path& path, const Tensor& t);
Tensor load_tstf(const std::filesystem::path& path);

// Binary P5 (1 channel) / P6 (3 channels), maxval 255. Pixels map to [0, 1]
// by /255; writing clamps and rounds to nearest.
Tensor load_pnm(const std::filesystem::path& path);
void save_pnm(const std::filesystem::path& path, const Tensor& image);

// Dispatch on extension: .tstf, .pgm, .ppm.
Tensor load_any(const std::filesystem::path& path);

}  // namespace tsm
