#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bitwave/error.hpp"
#include "bitwave/features.hpp"

namespace bitwave::features {

std::vector<double> window_coefficients(Window window, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length <= 1 || window == Window::rect) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    w[n] = window == Window::hamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

FrameSpec FrameSpec::for_rate(std::uint32_t sample_rate) {
  FrameSpec spec;
  spec.frame_length = static_cast<std::size_t>(std::lround(0.032 * sample_rate));
  spec.hop = static_cast<std::size_t>(std::lround(0.010 * sample_rate));
  return spec;
}

void FrameSpec::validate() const {
  if (frame_length == 0 || hop == 0 || hop > frame_length)
    throw Error(ErrorKind::config, "frame spec requires 0 < hop <= frame_length");
}

std::size_t frame_count(std::size_t samples, const FrameSpec& spec) {
  if (samples < spec.frame_length) return 0;
  return 1 + (samples - spec.frame_length) / spec.hop;
}

std::vector<double> frame_power(std::span<const double> frame, std::size_t fft_size) {
  if (frame.size() > fft_size) throw Error(ErrorKind::config, "frame longer than FFT size");
  std::vector<Complex> buf(fft_size);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  const auto spectrum = fft(buf);
  std::vector<double> power(fft_size / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);
  return power;
}

namespace {

// Windowed frames as doubles, one vector per frame.
std::vector<std::vector<double>> windowed_frames(const audio::Waveform& w, const FrameSpec& spec) {
  spec.validate();
  const std::size_t frames = frame_count(w.samples.size(), spec);
  if (frames == 0)
    throw Error(ErrorKind::too_short, "clip of " + std::to_string(w.samples.size()) +
                                          " samples is shorter than one frame (" +
                                          std::to_string(spec.frame_length) + ")");
  const auto win = window_coefficients(spec.window, spec.frame_length);
  std::vector<std::vector<double>> out(frames, std::vector<double>(spec.frame_length));
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t i = 0; i < spec.frame_length; ++i)
      out[f][i] = win[i] * w.samples[f * spec.hop + i];
  return out;
}

std::string describe(const FrameSpec& spec) {
  std::ostringstream os;
  os << "frame=" << spec.frame_length << " hop=" << spec.hop << " window="
     << (spec.window == Window::hamming ? "hamming" : spec.window == Window::hann ? "hann" : "rect");
  return os.str();
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

FeatureMatrix power_spectrum_features(const audio::Waveform& w, const FrameSpec& spec) {
  if (spec.frame_length > kSpectrumFftSize)
    throw Error(ErrorKind::config, "power spectrum frames must not exceed 512 samples");
  const auto frames = windowed_frames(w, spec);
  FeatureMatrix stat;
  stat.rows = frames.size();
  stat.cols = kSpectrumBins;
  stat.values.resize(stat.rows * stat.cols);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto power = frame_power(frames[f], kSpectrumFftSize);
    for (std::size_t k = 1; k <= kSpectrumBins; ++k)
      stat.at(f, k - 1) = std::log(std::max(power[k], kLogFloor));
  }
  auto out = append_deltas(stat);
  out.name = "power_spectrum";
  out.params = describe(spec) + " fft=512 bins=1..256 log_floor=1e-10 deltas=2";
  return out;
}

FeatureMatrix delta(const FeatureMatrix& f, int window) {
  if (window < 1) throw Error(ErrorKind::config, "delta window must be >= 1");
  FeatureMatrix d;
  d.rows = f.rows;
  d.cols = f.cols;
  d.values.assign(f.values.size(), 0.0);
  d.name = f.name + "_delta";
  double norm = 0.0;
  for (int n = 1; n <= window; ++n) norm += static_cast<double>(n * n);
  norm *= 2.0;
  const auto last = static_cast<std::ptrdiff_t>(f.rows) - 1;
  for (std::size_t t = 0; t < f.rows; ++t) {
    for (int n = 1; n <= window; ++n) {
      const auto ahead = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + n, last));
      const auto behind = static_cast<std::size_t>(std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) - n, 0));
      for (std::size_t c = 0; c < f.cols; ++c)
        d.at(t, c) += n * (f.at(ahead, c) - f.at(behind, c));
    }
    for (std::size_t c = 0; c < f.cols; ++c) d.at(t, c) /= norm;
  }
  return d;
}

FeatureMatrix append_deltas(const FeatureMatrix& f, int window) {
  const auto d1 = delta(f, window);
  const auto d2 = delta(d1, window);
  FeatureMatrix out;
  out.rows = f.rows;
  out.cols = 3 * f.cols;
  out.values.resize(out.rows * out.cols);
  out.name = f.name;
  out.params = f.params;
  for (std::size_t t = 0; t < f.rows; ++t) {
    for (std::size_t c = 0; c < f.cols; ++c) {
      out.at(t, c) = f.at(t, c);
      out.at(t, f.cols + c) = d1.at(t, c);
      out.at(t, 2 * f.cols + c) = d2.at(t, c);
    }
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t fft_size, std::uint32_t sample_rate,
                             double f_min, double f_max) {
  if (n_mels == 0) throw Error(ErrorKind::config, "mel filterbank needs at least one filter");
  if (f_max <= 0.0) f_max = sample_rate / 2.0;
  if (!(f_min >= 0.0 && f_min < f_max)) throw Error(ErrorKind::config, "invalid mel frequency range");

  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = fft_size / 2 + 1;
  fb.sample_rate = sample_rate;
  fb.weights.assign(n_mels * fb.n_bins, 0.0);
  fb.centers_hz.resize(n_mels);

  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_mels + 1));

  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    fb.centers_hz[m] = mid;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double weight = 0.0;
      if (f > lo && f <= mid)
        weight = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        weight = (hi - f) / (hi - mid);
      fb.weights[m * fb.n_bins + k] = weight;
    }
  }
  return fb;
}

std::vector<double> MelFilterbank::apply(std::span<const double> power) const {
  if (power.size() != n_bins) throw Error(ErrorKind::shape, "power spectrum length does not match filterbank");
  std::vector<double> out(n_mels, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double* row = weights.data() + m * n_bins;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) acc += row[k] * power[k];
    out[m] = acc;
  }
  return out;
}

std::vector<double> dct_ii(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return out;
}

FeatureMatrix mfcc(const audio::Waveform& w, const FrameSpec& spec, std::size_t n_mels, std::size_t n_ceps) {
  if (n_ceps == 0 || n_ceps > n_mels) throw Error(ErrorKind::config, "need 0 < n_ceps <= n_mels");
  const auto frames = windowed_frames(w, spec);
  const std::size_t fft_size = next_power_of_two(spec.frame_length);
  const auto fb = mel_filterbank(n_mels, fft_size, w.sample_rate);

  FeatureMatrix stat;
  stat.rows = frames.size();
  stat.cols = n_ceps;
  stat.values.resize(stat.rows * stat.cols);
  std::vector<double> log_mel(n_mels);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto energies = fb.apply(frame_power(frames[f], fft_size));
    for (std::size_t m = 0; m < n_mels; ++m) log_mel[m] = std::log(std::max(energies[m], kLogFloor));
    const auto ceps = dct_ii(log_mel);
    for (std::size_t c = 0; c < n_ceps; ++c) stat.at(f, c) = ceps[c];
  }
  auto out = append_deltas(stat);
  out.name = "mfcc";
  out.params = describe(spec) + " fft=" + std::to_string(fft_size) + " mels=" + std::to_string(n_mels) +
               " ceps=" + std::to_string(n_ceps) + " deltas=2";
  return out;
}

nn::Tensor raw_numeric(const audio::Waveform& w, bool normalize) {
  const double scale = normalize ? 1.0 / static_cast<double>(std::int64_t{1} << (w.bit_depth - 1)) : 1.0;
  std::vector<double> values(w.samples.size());
  for (std::size_t t = 0; t < values.size(); ++t) values[t] = w.samples[t] * scale;
  const std::size_t n = values.size();
  return nn::Tensor({1, n}, std::move(values));
}

nn::Tensor to_channel_major(const FeatureMatrix& f) {
  nn::Tensor out({f.cols, f.rows});
  for (std::size_t r = 0; r < f.rows; ++r)
    for (std::size_t c = 0; c < f.cols; ++c) out[c * f.rows + r] = f.at(r, c);
  return out;
}

container::Container pack(const FeatureMatrix& f, std::uint32_t sample_rate) {
  container::Container c;
  c.kind = container::PayloadKind::feature_matrix;
  c.sample_rate = sample_rate;
  c.rows = f.rows;
  c.cols = f.cols;
  c.meta = f.name + (f.params.empty() ? "" : " " + f.params);
  c.values = f.values;
  return c;
}

FeatureMatrix unpack_features(const container::Container& c) {
  if (c.kind != container::PayloadKind::feature_matrix)
    throw Error(ErrorKind::io_parse, "container does not hold a feature matrix");
  FeatureMatrix f;
  f.rows = c.rows;
  f.cols = c.cols;
  f.values = c.values;
  const auto space = c.meta.find(' ');
  f.name = c.meta.substr(0, space);
  if (space != std::string::npos) f.params = c.meta.substr(space + 1);
  return f;
}

void write_csv(const FeatureMatrix& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (std::size_t c = 0; c < f.cols; ++c) {
      if (c) out << ',';
      out << f.at(r, c);
    }
    out << '\n';
  }
}

}  // namespace bitwave::features
