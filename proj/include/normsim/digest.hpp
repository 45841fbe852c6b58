#pragma once

#include <cstdint>
#include <string>

namespace normsim {

// 64-bit FNV-1a over a byte string; used for config fingerprints and
// seed-stable choices that must not depend on platform hashing.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string to_hex(std::uint64_t value);

}  // namespace normsim
