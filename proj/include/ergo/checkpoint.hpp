#pragma once

// Value-net checkpoint file:
//   magic "ERGOVNET" | u32 format version | u64 metadata length |
//   metadata (canonical JSON) | u64 parameter count |
//   parameters (little-endian IEEE-754 binary64) | u64 FNV-1a of all prior bytes
// All integers are little-endian.

#include <string>

#include "ergo/hji.hpp"

namespace ergo {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ValueNet& net);
ValueNet decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ValueNet& net, const std::string& path);

// Throws CorruptFile on malformed input and FingerprintMismatch when
// `expected` is given and the stored problem differs from it.
ValueNet load_checkpoint(const std::string& path, const Problem* expected = nullptr);

}  // namespace ergo
