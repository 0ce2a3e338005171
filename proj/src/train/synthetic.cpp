#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "bitwave/error.hpp"
#include "bitwave/seed.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

constexpr const char* kNoiseBurst = "noise_burst";
constexpr const char* kSweep = "sweep";

std::vector<double> sweep(std::size_t n, double rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(200.0, 0.4 * rate), phase0(0.0, 2.0 * std::numbers::pi);
  const double f0 = freq(rng), f1 = freq(rng);
  const double duration = static_cast<double>(n) / rate;
  double phase = phase0(rng);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    out[i] = std::sin(phase);
    phase += 2.0 * std::numbers::pi * (f0 + (f1 - f0) * t / duration) / rate;
  }
  return out;
}

// Gaussian noise through a band-pass biquad, gated into a few bursts.
std::vector<double> noise_bursts(std::size_t n, double rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> centre(300.0, 0.35 * rate), q(1.0, 4.0), unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double w0 = 2.0 * std::numbers::pi * centre(rng) / rate;
  const double alpha = std::sin(w0) / (2.0 * q(rng));
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0, a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> out(n);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gauss(rng);
    const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    out[i] = y;
  }
  std::vector<double> gate(n, 0.0);
  const int bursts = 2 + static_cast<int>(unit(rng) * 3.0);
  const auto ramp = static_cast<std::size_t>(0.005 * rate);
  for (int b = 0; b < bursts; ++b) {
    const auto len = static_cast<std::size_t>((0.05 + 0.15 * unit(rng)) * rate);
    if (len >= n) continue;
    const auto start = static_cast<std::size_t>(unit(rng) * static_cast<double>(n - len));
    for (std::size_t i = 0; i < len; ++i) {
      double g = 1.0;
      if (i < ramp) g = static_cast<double>(i) / static_cast<double>(ramp);
      if (len - i <= ramp) g = std::min(g, static_cast<double>(len - i) / static_cast<double>(ramp));
      gate[start + i] = std::max(gate[start + i], g);
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] *= gate[i];
  return out;
}

audio::Waveform to_wave(std::vector<double> x, std::uint32_t rate, double peak_fraction) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  audio::Waveform w;
  w.sample_rate = rate;
  w.bit_depth = 16;
  w.samples.resize(x.size());
  const double scale = peak > 0.0 ? peak_fraction * audio::max_sample(16) / peak : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) w.samples[i] = audio::quantize(x[i] * scale, 16);
  return w;
}

std::string clip_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%04zu", i);
  return buf;
}

}  // namespace

SyntheticTask make_synthetic(const SyntheticSpec& spec) {
  if (spec.train_clips == 0 || spec.train_clips >= spec.clips)
    throw Error(ErrorKind::config, "synthetic task needs non-empty train and test splits");
  const auto n = static_cast<std::size_t>(std::floor(spec.seconds * spec.sample_rate));
  if (n == 0) throw Error(ErrorKind::config, "synthetic clips must contain samples");
  SyntheticTask task;
  task.train.labels = task.test.labels = {kNoiseBurst, kSweep};
  for (std::size_t i = 0; i < spec.clips; ++i) {
    std::mt19937_64 rng(seed::derive(spec.seed, clip_name(i)));
    const std::size_t label = i % 2;
    std::uniform_real_distribution<double> level(0.2, 0.9);
    const double rate = static_cast<double>(spec.sample_rate);
    auto x = label == 0 ? noise_bursts(n, rate, rng) : sweep(n, rate, rng);
    Clip clip{"synthetic/" + clip_name(i), to_wave(std::move(x), spec.sample_rate, level(rng)), label};
    (i < spec.train_clips ? task.train : task.test).clips.push_back(std::move(clip));
  }
  return task;
}

std::filesystem::path write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  const SyntheticTask task = make_synthetic(spec);
  std::filesystem::create_directories(dir / "clips");
  const auto manifest_path = dir / "manifest.csv";
  std::ofstream manifest(manifest_path);
  if (!manifest) throw Error(ErrorKind::io_parse, "cannot write '" + manifest_path.string() + "'");
  manifest << "path,label,split\n";
  auto emit = [&](const Dataset& d, const char* split) {
    for (const Clip& c : d.clips) {
      const std::string rel = "clips/" + c.id.substr(c.id.find('/') + 1) + ".wav";
      audio::save_wav(c.wave, dir / rel);
      manifest << rel << "," << d.labels[c.label] << "," << split << "\n";
    }
  };
  emit(task.train, "train");
  emit(task.test, "test");
  return manifest_path;
}

}  // namespace bitwave::train
