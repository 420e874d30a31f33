#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcpvit/model.hpp"

namespace tcpvit {

// Checkpoint layout, all integers little-endian:
//   magic "TCPV" | format version u32 = 1 | tensor count u32
//   per tensor: name length u16, UTF-8 name, ndim u8, dims u64 each,
//               values as 64-bit IEEE doubles
//   trailing CRC32 (IEEE polynomial) of all preceding bytes.

uint32_t crc32_ieee(const uint8_t* data, size_t len);

void save_checkpoint(const std::string& path, const EncoderParams& params);

// Loads into an EncoderParams of matching structure (built from the same
// config); throws on CRC failure, unknown tensors or shape mismatches.
void load_checkpoint(const std::string& path, EncoderParams& params);

// In-memory forms used by both the file functions and the tests.
std::vector<uint8_t> serialize_checkpoint(const EncoderParams& params);
void deserialize_checkpoint(const std::vector<uint8_t>& bytes, EncoderParams& params);

}  // namespace tcpvit
