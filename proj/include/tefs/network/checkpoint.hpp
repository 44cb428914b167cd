#pragma once

#include <filesystem>
#include <string>

#include "tefs/network/model.hpp"

namespace tefs::network {

// Model checkpoint container (little-endian):
//
//   "TFSM"                    magic
//   u32 version (1)
//   u32 architecture (0 A1, 1 A2, 2 TEFS)
//   u64 initialization seed
//   u32 K, u32 B              input geometry
//   u32 array count
//   per array:
//     u32 name length, name bytes (UTF-8)
//     u32 rank, u32 dims[rank]
//     f32 values[prod(dims)]
//
// Arrays appear in Network::parameters() order and include BN running stats.
std::string encode_checkpoint(Network<float>& net);
Network<float> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, Network<float>& net);
Network<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace tefs::network
