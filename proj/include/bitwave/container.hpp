#pragma once

// Binary container shared by the bit transforms and feature extractors.
//
// Layout (all integers little-endian):
//   magic      4 bytes  "BWRP"
//   version    u32      1
//   kind       u32      1 = bit pulses, 2 = bit image, 3 = feature matrix
//   bit_depth  u32      B for bit payloads, 0 for features
//   rate       u32      sample rate of the source clip
//   rows       u64
//   cols       u64
//   meta_len   u32, then meta_len bytes of UTF-8 text
//   payload    rows*cols entries, row-major; u8 per bit or f64 per value
//
// Bit pulses are stored (B, T); bit images (T, B).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bitwave/bitrep.hpp"

namespace bitwave::container {

inline constexpr char kMagic[4] = {'B', 'W', 'R', 'P'};
inline constexpr std::uint32_t kVersion = 1;

enum class PayloadKind : std::uint32_t { bit_pulses = 1, bit_image = 2, feature_matrix = 3 };

struct Container {
  PayloadKind kind = PayloadKind::bit_pulses;
  std::uint32_t bit_depth = 0;
  std::uint32_t sample_rate = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::string meta;
  std::vector<std::uint8_t> bits;  // bit payloads
  std::vector<double> values;      // feature payloads

  bool operator==(const Container&) const = default;
};

std::vector<std::uint8_t> encode(const Container& c);
Container decode(const std::vector<std::uint8_t>& bytes);

void write_file(const Container& c, const std::filesystem::path& path);
Container read_file(const std::filesystem::path& path);

Container pack(const bitrep::BitPulseSet& p);
Container pack(const bitrep::BitPatternImage& img);
bitrep::BitPulseSet unpack_pulses(const Container& c);
bitrep::BitPatternImage unpack_image(const Container& c);

}  // namespace bitwave::container
