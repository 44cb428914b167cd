#pragma once

#include <filesystem>
#include <string>

#include "tefs/frontend/representation.hpp"

namespace tefs::frontend {

// Binary representation container (all fields little-endian):
//
//   offset  size  field
//   0       4     magic "TFSR"
//   4       4     u32 format version (1)
//   8       4     u32 kind (0 envelope, 1 fine structure, 2 stft log-magnitude)
//   12      4     u32 K (rows)
//   16      4     u32 L (columns)
//   20      8     f64 frame length in seconds
//   28      4     u32 sample rate in Hz
//   32      4*K*L f32 values, row-major (band-major)
//
// Values are stored as 32-bit floats, so a round trip is exact only to float
// precision.
std::string encode_representation(const Representation& rep);
Representation decode_representation(const std::string& bytes);

void write_representation(const std::filesystem::path& path, const Representation& rep);
Representation read_representation(const std::filesystem::path& path);

// CSV with K rows of L comma-separated values.
void write_representation_csv(const std::filesystem::path& path, const Representation& rep);

}  // namespace tefs::frontend
