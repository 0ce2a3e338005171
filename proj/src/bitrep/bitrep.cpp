#include "bitwave/bitrep.hpp"

#include <string>

#include "bitwave/error.hpp"

namespace bitwave::bitrep {
namespace {

void check_depth(int bit_depth) {
  if (bit_depth < 1 || bit_depth > 31)
    throw Error(ErrorKind::range, "bit depth " + std::to_string(bit_depth) + " not supported");
}

// Unsigned image of s modulo 2^B.
std::uint32_t twos_complement(std::int32_t s, int bit_depth) {
  const std::uint32_t mask = (bit_depth == 32) ? ~0u : ((1u << bit_depth) - 1u);
  return static_cast<std::uint32_t>(s) & mask;
}

}  // namespace

std::vector<std::uint8_t> sample_to_bits(std::int32_t sample, int bit_depth) {
  check_depth(bit_depth);
  if (sample < audio::min_sample(bit_depth) || sample > audio::max_sample(bit_depth))
    throw Error(ErrorKind::range, "sample " + std::to_string(sample) + " does not fit " +
                                      std::to_string(bit_depth) + " bits");
  const std::uint32_t u = twos_complement(sample, bit_depth);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(bit_depth));
  for (int b = 0; b < bit_depth; ++b) bits[b] = static_cast<std::uint8_t>((u >> (bit_depth - 1 - b)) & 1u);
  return bits;
}

std::int32_t bits_to_sample(std::span<const std::uint8_t> bits) {
  const int depth = static_cast<int>(bits.size());
  check_depth(depth);
  std::uint32_t u = 0;
  for (std::uint8_t bit : bits) {
    if (bit > 1) throw Error(ErrorKind::domain, "bit value " + std::to_string(bit) + " is not binary");
    u = (u << 1) | bit;
  }
  // Sign-extend from bit (depth - 1).
  const std::uint32_t sign = 1u << (depth - 1);
  return static_cast<std::int32_t>(u ^ sign) - static_cast<std::int32_t>(sign);
}

BitPulseSet to_bit_pulses(const audio::Waveform& w) {
  audio::validate(w);
  const int depth = w.bit_depth;
  BitPulseSet p;
  p.bit_depth = depth;
  p.length = w.samples.size();
  p.sample_rate = w.sample_rate;
  p.data.resize(static_cast<std::size_t>(depth) * p.length);
  for (std::size_t t = 0; t < p.length; ++t) {
    const std::uint32_t u = twos_complement(w.samples[t], depth);
    for (int b = 0; b < depth; ++b)
      p.data[static_cast<std::size_t>(b) * p.length + t] =
          static_cast<std::uint8_t>((u >> (depth - 1 - b)) & 1u);
  }
  return p;
}

audio::Waveform from_bit_pulses(const BitPulseSet& p) {
  check_depth(p.bit_depth);
  if (p.data.size() != static_cast<std::size_t>(p.bit_depth) * p.length)
    throw Error(ErrorKind::shape, "bit pulse channels do not share length " + std::to_string(p.length));
  audio::Waveform w;
  w.sample_rate = p.sample_rate;
  w.bit_depth = p.bit_depth;
  w.samples.resize(p.length);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(p.bit_depth));
  for (std::size_t t = 0; t < p.length; ++t) {
    for (int b = 0; b < p.bit_depth; ++b) bits[b] = p.at(b, t);
    w.samples[t] = bits_to_sample(bits);
  }
  return w;
}

BitPatternImage to_bit_image(const audio::Waveform& w) {
  audio::validate(w);
  const int depth = w.bit_depth;
  BitPatternImage img;
  img.bit_depth = depth;
  img.rows = w.samples.size();
  img.sample_rate = w.sample_rate;
  img.data.resize(img.rows * static_cast<std::size_t>(depth));
  for (std::size_t t = 0; t < img.rows; ++t) {
    const std::uint32_t u = twos_complement(w.samples[t], depth);
    for (int b = 0; b < depth; ++b)
      img.data[t * depth + b] = static_cast<std::uint8_t>((u >> (depth - 1 - b)) & 1u);
  }
  return img;
}

audio::Waveform from_bit_image(const BitPatternImage& img) {
  check_depth(img.bit_depth);
  if (img.data.size() != img.rows * img.cols())
    throw Error(ErrorKind::shape, "bit image payload does not match its shape");
  audio::Waveform w;
  w.sample_rate = img.sample_rate;
  w.bit_depth = img.bit_depth;
  w.samples.resize(img.rows);
  for (std::size_t t = 0; t < img.rows; ++t)
    w.samples[t] = bits_to_sample(std::span<const std::uint8_t>(img.data.data() + t * img.cols(), img.cols()));
  return w;
}

namespace {
nn::Tensor map_bits(nn::Shape shape, const std::vector<std::uint8_t>& bits, BitMapping mapping) {
  std::vector<double> values(bits.size());
  const double zero = mapping == BitMapping::bipolar ? -1.0 : 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) values[i] = bits[i] ? 1.0 : zero;
  return nn::Tensor(std::move(shape), std::move(values));
}
}  // namespace

nn::Tensor bits_to_numeric(const BitPulseSet& p, BitMapping mapping) {
  return map_bits({static_cast<std::size_t>(p.bit_depth), p.length}, p.data, mapping);
}

nn::Tensor bits_to_numeric(const BitPatternImage& img, BitMapping mapping) {
  return map_bits({img.rows, img.cols()}, img.data, mapping);
}

}  // namespace bitwave::bitrep
