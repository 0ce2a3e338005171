#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bitwave/audio.hpp"
#include "bitwave/tensor.hpp"

namespace bitwave::bitrep {

/// Two's complement bit vector, most significant bit first.
std::vector<std::uint8_t> sample_to_bits(std::int32_t sample, int bit_depth);
std::int32_t bits_to_sample(std::span<const std::uint8_t> bits);

/// One binary channel per bit plane; channel 0 is the MSB (sign bit).
/// Stored channel-major: data[b * length + t].
struct BitPulseSet {
  int bit_depth = 16;
  std::size_t length = 0;
  std::uint32_t sample_rate = 0;
  std::vector<std::uint8_t> data;

  std::span<const std::uint8_t> channel(int b) const {
    return {data.data() + static_cast<std::size_t>(b) * length, length};
  }
  std::uint8_t at(int b, std::size_t t) const { return data[static_cast<std::size_t>(b) * length + t]; }
  bool operator==(const BitPulseSet&) const = default;
};

/// T x B grid; row t is the bit vector of sample t. Stored row-major.
struct BitPatternImage {
  int bit_depth = 16;
  std::size_t rows = 0;
  std::uint32_t sample_rate = 0;
  std::vector<std::uint8_t> data;

  std::size_t cols() const noexcept { return static_cast<std::size_t>(bit_depth); }
  std::uint8_t at(std::size_t t, int b) const { return data[t * cols() + static_cast<std::size_t>(b)]; }
  bool operator==(const BitPatternImage&) const = default;
};

BitPulseSet to_bit_pulses(const audio::Waveform& w);
audio::Waveform from_bit_pulses(const BitPulseSet& p);

BitPatternImage to_bit_image(const audio::Waveform& w);
audio::Waveform from_bit_image(const BitPatternImage& img);

enum class BitMapping { unipolar01, bipolar };

/// Shape (B, T) for pulses and (T, B) for images.
nn::Tensor bits_to_numeric(const BitPulseSet& p, BitMapping mapping = BitMapping::unipolar01);
nn::Tensor bits_to_numeric(const BitPatternImage& img, BitMapping mapping = BitMapping::unipolar01);

}  // namespace bitwave::bitrep
