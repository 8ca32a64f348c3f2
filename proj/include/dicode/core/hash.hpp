#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dicode/core/types.hpp"

namespace dicode {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string to_hex(std::uint64_t value);

/// Bit-exact key for a real array (hash of its IEEE bytes).
std::uint64_t array_hash(const Vec& values);

}  // namespace dicode
