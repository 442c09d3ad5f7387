#ifndef APEX_HASH_H
#define APEX_HASH_H

#include <cstdint>
#include <string>
#include <string_view>

namespace apex {

/// 64-bit FNV-1a; stable across runs and platforms.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v);

} // namespace apex

#endif
