#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace bitwave::audio {

/// Signed integer PCM clip. Samples are held widened to int32 regardless of
/// bit depth; every value must fit the declared depth.
struct Waveform {
  std::vector<std::int32_t> samples;
  std::uint32_t sample_rate = 0;
  int bit_depth = 16;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_seconds() const noexcept {
    return sample_rate == 0 ? 0.0 : static_cast<double>(samples.size()) / sample_rate;
  }

  bool operator==(const Waveform&) const = default;
};

constexpr std::int32_t min_sample(int bit_depth) noexcept {
  return -(std::int32_t{1} << (bit_depth - 1));
}
constexpr std::int32_t max_sample(int bit_depth) noexcept {
  return (std::int32_t{1} << (bit_depth - 1)) - 1;
}

/// Throws Error(range) if any invariant is violated.
void validate(const Waveform& w);

/// Rounds and clamps a real value into the B-bit signed range.
std::int32_t quantize(double value, int bit_depth) noexcept;

// --- WAV I/O --------------------------------------------------------------

struct ChannelSelect {
  /// nullopt: average all channels to mono; otherwise keep this channel only.
  std::optional<unsigned> channel;
};

struct WavInfo {
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint32_t frames = 0;
};

Waveform load_wav(const std::filesystem::path& path, ChannelSelect select = {});
Waveform parse_wav(const std::vector<std::uint8_t>& bytes, ChannelSelect select = {});
WavInfo probe_wav(const std::filesystem::path& path);

void save_wav(const Waveform& w, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const Waveform& w);

// --- Conversion -----------------------------------------------------------

/// Kaiser-windowed sinc, polyphase evaluation of the reduced L/M ratio.
struct ResamplerSpec {
  int taps = 64;
  /// Passband edge as a fraction of the lower of the two sample rates.
  double cutoff = 0.45;
  double kaiser_beta = 8.6;
};

Waveform resample(const Waveform& w, std::uint32_t target_rate,
                  const ResamplerSpec& spec = {});

/// Non-overlapping windows of floor(seconds * rate) samples; tail dropped.
std::vector<Waveform> segment(const Waveform& w, double seconds);

/// Mean of squared samples.
double signal_power(const Waveform& w);

enum class NoiseKind { white_gaussian };

struct SnrSpec {
  double snr_db = std::numeric_limits<double>::infinity();
  NoiseKind noise_kind = NoiseKind::white_gaussian;

  static SnrSpec clean() { return {}; }
  bool is_clean() const noexcept { return snr_db == std::numeric_limits<double>::infinity(); }
  bool operator==(const SnrSpec&) const = default;
};

/// Real-valued noisy signal before re-quantization. Noise is rescaled so its
/// realized mean power is exactly P_signal / 10^(snr/10).
std::vector<double> noisy_signal(const Waveform& w, const SnrSpec& spec,
                                 std::uint64_t seed);

Waveform mix_noise(const Waveform& w, const SnrSpec& spec, std::uint64_t seed);

}  // namespace bitwave::audio
