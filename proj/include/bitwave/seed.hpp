#pragma once

#include <cstdint>
#include <string_view>

namespace bitwave::seed {

/// splitmix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept { return mix(a ^ mix(b)); }

/// FNV-1a over the bytes of s.
constexpr std::uint64_t hash(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t derive(std::uint64_t global, std::string_view tag) noexcept {
  return combine(global, hash(tag));
}

}  // namespace bitwave::seed
