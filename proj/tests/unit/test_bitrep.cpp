#include <gtest/gtest.h>

#include <random>

#include "bitwave/bitrep.hpp"
#include "bitwave/container.hpp"
#include "bitwave/error.hpp"

using namespace bitwave;

namespace {

// Independent oracle: bit b (MSB first) of the two's complement pattern.
std::uint8_t oracle_bit(std::int32_t s, int depth, int b) {
  const std::uint32_t pattern = static_cast<std::uint32_t>(s) & ((1u << depth) - 1u);
  return static_cast<std::uint8_t>((pattern >> (depth - 1 - b)) & 1u);
}

audio::Waveform random_wave(std::mt19937_64& rng, int depth, std::size_t n) {
  std::uniform_int_distribution<std::int32_t> d(audio::min_sample(depth), audio::max_sample(depth));
  audio::Waveform w{{}, 8000, depth};
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(d(rng));
  return w;
}

}  // namespace

TEST(Bits, KnownPatterns) {
  EXPECT_EQ(bitrep::sample_to_bits(12, 8), (std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1, 0, 0}));
  EXPECT_EQ(bitrep::sample_to_bits(-1, 8), std::vector<std::uint8_t>(8, 1));
  auto min16 = std::vector<std::uint8_t>(16, 0);
  min16[0] = 1;
  EXPECT_EQ(bitrep::sample_to_bits(-32768, 16), min16);
  EXPECT_EQ(bitrep::sample_to_bits(1, 16).back(), 1);
  EXPECT_EQ(bitrep::sample_to_bits(1, 16).front(), 0);
}

TEST(Bits, MatchesOracleExhaustively) {
  for (int depth : {8, 16}) {
    for (std::int32_t s = audio::min_sample(depth); s <= audio::max_sample(depth); ++s) {
      const auto bits = bitrep::sample_to_bits(s, depth);
      for (int b = 0; b < depth; ++b) ASSERT_EQ(bits[b], oracle_bit(s, depth, b)) << s;
      ASSERT_EQ(bitrep::bits_to_sample(bits), s);
    }
  }
}

TEST(Bits, Errors) {
  const auto kind = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::numerical;
  };
  EXPECT_EQ(kind([] { bitrep::sample_to_bits(128, 8); }), ErrorKind::range);
  EXPECT_EQ(kind([] { bitrep::sample_to_bits(-32769, 16); }), ErrorKind::range);
  std::vector<std::uint8_t> bad{0, 2, 1};
  EXPECT_EQ(kind([&] { bitrep::bits_to_sample(bad); }), ErrorKind::domain);
  bitrep::BitPulseSet p{16, 4, 8000, std::vector<std::uint8_t>(60, 0)};
  EXPECT_EQ(kind([&] { bitrep::from_bit_pulses(p); }), ErrorKind::shape);
}

TEST(Transforms, ImageIsTransposedPulsesAndBothInvert) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int depth = trial % 3 == 0 ? 8 : 16;
    const auto w = random_wave(rng, depth, 1 + rng() % 700);
    const auto p = bitrep::to_bit_pulses(w);
    const auto img = bitrep::to_bit_image(w);
    ASSERT_EQ(p.length, w.size());
    ASSERT_EQ(img.rows, w.size());
    for (std::size_t t = 0; t < w.size(); ++t)
      for (int b = 0; b < depth; ++b) {
        ASSERT_EQ(p.at(b, t), img.at(t, b));
        ASSERT_EQ(p.at(b, t), oracle_bit(w.samples[t], depth, b));
      }
    EXPECT_EQ(bitrep::from_bit_pulses(p), w);
    EXPECT_EQ(bitrep::from_bit_image(img), w);
  }
}

TEST(Transforms, MsbTracksPolarity) {
  audio::Waveform w{{5, -5, 0, -1, 32767, -32768}, 8000, 16};
  const auto p = bitrep::to_bit_pulses(w);
  for (std::size_t t = 0; t < w.size(); ++t) EXPECT_EQ(p.at(0, t), w.samples[t] < 0 ? 1 : 0);
}

TEST(Transforms, NumericMappings) {
  audio::Waveform w{{12, -1}, 8000, 8};
  const auto p = bitrep::to_bit_pulses(w);
  const auto uni = bitrep::bits_to_numeric(p);
  const auto bip = bitrep::bits_to_numeric(p, bitrep::BitMapping::bipolar);
  ASSERT_EQ(uni.shape(), (nn::Shape{8, 2}));
  for (int b = 0; b < 8; ++b)
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_EQ(uni.at(b, t), p.at(b, t));
      EXPECT_EQ(bip.at(b, t), p.at(b, t) ? 1.0 : -1.0);
    }
  const auto img = bitrep::bits_to_numeric(bitrep::to_bit_image(w));
  ASSERT_EQ(img.shape(), (nn::Shape{2, 8}));
  EXPECT_EQ(img.at(0, 4), 1.0);
  EXPECT_EQ(img.at(0, 3), 0.0);
}

TEST(Container, RoundTrips) {
  std::mt19937_64 rng(2);
  const auto w = random_wave(rng, 16, 333);
  const auto p = bitrep::to_bit_pulses(w);
  const auto img = bitrep::to_bit_image(w);
  const auto pc = container::decode(container::encode(container::pack(p)));
  EXPECT_EQ(pc.rows, 16u);
  EXPECT_EQ(pc.cols, 333u);
  EXPECT_EQ(container::unpack_pulses(pc), p);
  const auto ic = container::decode(container::encode(container::pack(img)));
  EXPECT_EQ(ic.rows, 333u);
  EXPECT_EQ(ic.cols, 16u);
  EXPECT_EQ(container::unpack_image(ic), img);
}

TEST(Container, RejectsCorruptBytes) {
  auto bytes = container::encode(container::pack(bitrep::to_bit_pulses(audio::Waveform{{1, 2}, 8000, 16})));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(container::decode(bad_magic), Error);
  bytes.pop_back();
  EXPECT_THROW(container::decode(bytes), Error);
  auto bad_bit = container::encode(container::pack(bitrep::to_bit_pulses(audio::Waveform{{1, 2}, 8000, 16})));
  bad_bit.back() = 7;
  EXPECT_THROW(container::unpack_pulses(container::decode(bad_bit)), Error);
}
