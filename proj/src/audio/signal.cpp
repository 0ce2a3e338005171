#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "bitwave/audio.hpp"
#include "bitwave/error.hpp"

namespace bitwave::audio {

void validate(const Waveform& w) {
  if (w.bit_depth != 8 && w.bit_depth != 16)
    throw Error(ErrorKind::range, "bit depth must be 8 or 16, got " + std::to_string(w.bit_depth));
  if (w.sample_rate == 0) throw Error(ErrorKind::range, "sample rate must be positive");
  if (w.samples.empty()) throw Error(ErrorKind::range, "waveform holds no samples");
  const auto lo = min_sample(w.bit_depth);
  const auto hi = max_sample(w.bit_depth);
  for (std::size_t t = 0; t < w.samples.size(); ++t) {
    if (w.samples[t] < lo || w.samples[t] > hi)
      throw Error(ErrorKind::range, "sample " + std::to_string(t) + " = " +
                                        std::to_string(w.samples[t]) + " exceeds " +
                                        std::to_string(w.bit_depth) + "-bit range");
  }
}

std::int32_t quantize(double value, int bit_depth) noexcept {
  const double lo = min_sample(bit_depth);
  const double hi = max_sample(bit_depth);
  const double r = std::round(value);
  return static_cast<std::int32_t>(std::clamp(r, lo, hi));
}

namespace {

double kaiser(double x, double beta) {
  // x in [-1, 1]
  const double arg = 1.0 - x * x;
  if (arg <= 0.0) return std::cyl_bessel_i(0.0, 0.0) / std::cyl_bessel_i(0.0, beta);
  return std::cyl_bessel_i(0.0, beta * std::sqrt(arg)) / std::cyl_bessel_i(0.0, beta);
}

// Taps for one fractional phase, normalized to unit DC gain. Tap j sits at
// source offset (half - 1 - j) relative to the integer base position.
void design_phase(double frac, double fc, const ResamplerSpec& spec, double* out) {
  const int half = spec.taps / 2;
  double sum = 0.0;
  for (int j = 0; j < spec.taps; ++j) {
    const double tau = frac + static_cast<double>(half - 1 - j);
    const double x = 2.0 * fc * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double h = 2.0 * fc * sinc * kaiser(tau / half, spec.kaiser_beta);
    out[j] = h;
    sum += h;
  }
  for (int j = 0; j < spec.taps; ++j) out[j] /= sum;
}

}  // namespace

Waveform resample(const Waveform& w, std::uint32_t target_rate, const ResamplerSpec& spec) {
  if (target_rate == 0) throw Error(ErrorKind::config, "target sample rate must be positive");
  validate(w);
  if (target_rate == w.sample_rate) return w;
  if (spec.taps < 2 || spec.taps % 2 != 0)
    throw Error(ErrorKind::config, "resampler tap count must be even and >= 2");

  const std::uint64_t g = std::gcd<std::uint64_t>(w.sample_rate, target_rate);
  const std::uint64_t up = target_rate / g;
  const std::uint64_t down = w.sample_rate / g;
  const double fc = spec.cutoff * std::min(w.sample_rate, target_rate) / w.sample_rate;

  const std::uint64_t T = w.samples.size();
  const std::uint64_t out_len = std::max<std::uint64_t>(1, (T * up + down - 1) / down);
  const int taps = spec.taps;
  const int half = taps / 2;

  // Precompute the polyphase bank when it is reasonably small.
  constexpr std::uint64_t kMaxPhases = 4096;
  std::vector<double> bank;
  if (up <= kMaxPhases) {
    bank.resize(up * taps);
    for (std::uint64_t p = 0; p < up; ++p)
      design_phase(static_cast<double>(p) / up, fc, spec, bank.data() + p * taps);
  }
  std::vector<double> scratch(taps);

  Waveform out;
  out.sample_rate = target_rate;
  out.bit_depth = w.bit_depth;
  out.samples.resize(out_len);
  for (std::uint64_t n = 0; n < out_len; ++n) {
    const std::uint64_t pos = n * down;
    const auto base = static_cast<std::int64_t>(pos / up);
    const std::uint64_t phase = pos % up;
    const double* h;
    if (!bank.empty()) {
      h = bank.data() + phase * taps;
    } else {
      design_phase(static_cast<double>(phase) / up, fc, spec, scratch.data());
      h = scratch.data();
    }
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      const std::int64_t src = base - (half - 1 - j);
      if (src < 0 || src >= static_cast<std::int64_t>(T)) continue;
      acc += h[j] * w.samples[static_cast<std::size_t>(src)];
    }
    out.samples[n] = quantize(acc, w.bit_depth);
  }
  return out;
}

std::vector<Waveform> segment(const Waveform& w, double seconds) {
  const double exact = seconds * w.sample_rate;
  if (!(seconds > 0.0) || exact < 1.0)
    throw Error(ErrorKind::config, "segment length must cover at least one sample");
  const auto len = static_cast<std::size_t>(std::floor(exact));
  std::vector<Waveform> parts;
  for (std::size_t start = 0; start + len <= w.samples.size(); start += len) {
    Waveform part;
    part.sample_rate = w.sample_rate;
    part.bit_depth = w.bit_depth;
    part.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                        w.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
    parts.push_back(std::move(part));
  }
  return parts;
}

double signal_power(const Waveform& w) {
  if (w.samples.empty()) throw Error(ErrorKind::range, "signal power of an empty waveform");
  double acc = 0.0;
  for (std::int32_t s : w.samples) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(w.samples.size());
}

std::vector<double> noisy_signal(const Waveform& w, const SnrSpec& spec, std::uint64_t seed) {
  std::vector<double> out(w.samples.begin(), w.samples.end());
  if (spec.is_clean()) return out;
  if (!std::isfinite(spec.snr_db)) throw Error(ErrorKind::config, "SNR must be finite or clean");
  const double p_signal = signal_power(w);
  if (p_signal <= 0.0)
    throw Error(ErrorKind::undefined_snr, "cannot inject noise at a given SNR into a silent clip");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(out.size());
  double p_raw = 0.0;
  for (double& v : noise) {
    v = gauss(rng);
    p_raw += v * v;
  }
  p_raw /= static_cast<double>(noise.size());
  const double p_target = p_signal / std::pow(10.0, spec.snr_db / 10.0);
  const double scale = p_raw > 0.0 ? std::sqrt(p_target / p_raw) : 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * noise[i];
  return out;
}

Waveform mix_noise(const Waveform& w, const SnrSpec& spec, std::uint64_t seed) {
  if (spec.is_clean()) return w;
  const auto noisy = noisy_signal(w, spec, seed);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.bit_depth = w.bit_depth;
  out.samples.resize(noisy.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) out.samples[i] = quantize(noisy[i], w.bit_depth);
  return out;
}

}  // namespace bitwave::audio
