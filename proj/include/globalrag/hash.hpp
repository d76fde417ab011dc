#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace globalrag {

/// 64-bit FNV-1a, stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace globalrag
