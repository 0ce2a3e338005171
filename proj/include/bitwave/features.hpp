#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bitwave/audio.hpp"
#include "bitwave/container.hpp"
#include "bitwave/tensor.hpp"

namespace bitwave::features {

using Complex = std::complex<double>;

/// Direct O(N^2) evaluation of X[k] = sum_n x[n] exp(-2 pi i k n / N).
std::vector<Complex> dft_naive(std::span<const Complex> x);

/// Iterative radix-2 FFT. N must be a power of two.
std::vector<Complex> fft(std::span<const Complex> x);

bool is_power_of_two(std::size_t n) noexcept;

enum class Window { hamming, hann, rect };

std::vector<double> window_coefficients(Window window, std::size_t length);

struct FrameSpec {
  std::size_t frame_length = 512;
  std::size_t hop = 160;
  Window window = Window::hamming;

  /// 32 ms frames with a 10 ms hop at the given rate.
  static FrameSpec for_rate(std::uint32_t sample_rate);
  void validate() const;
};

std::size_t frame_count(std::size_t samples, const FrameSpec& spec);

/// Rectangular matrix of frame-level features; row = frame.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::string name;
  std::string params;

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

inline constexpr std::size_t kSpectrumFftSize = 512;
inline constexpr std::size_t kSpectrumBins = 256;
inline constexpr double kLogFloor = 1e-10;

/// One-sided |FFT|^2 of a windowed, zero-padded frame: fft_size/2 + 1 bins.
std::vector<double> frame_power(std::span<const double> frame, std::size_t fft_size);

/// Log power of bins 1..256 of a 512-point FFT per frame, followed by the
/// delta and delta-delta blocks: 768 columns.
FeatureMatrix power_spectrum_features(const audio::Waveform& w, const FrameSpec& spec);

/// Regression delta over +-N frames with edge replication.
FeatureMatrix delta(const FeatureMatrix& f, int window = 2);

/// [f | delta(f) | delta(delta(f))]
FeatureMatrix append_deltas(const FeatureMatrix& f, int window = 2);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK-style mel filters over the one-sided FFT bins.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::uint32_t sample_rate = 0;
  std::vector<double> weights;      // n_mels x n_bins
  std::vector<double> centers_hz;   // n_mels

  std::vector<double> apply(std::span<const double> power) const;
};

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t fft_size, std::uint32_t sample_rate,
                             double f_min = 0.0, double f_max = 0.0);

/// Orthonormal DCT-II.
std::vector<double> dct_ii(std::span<const double> x);

/// n_ceps cepstra + deltas + delta-deltas (3 * n_ceps columns).
FeatureMatrix mfcc(const audio::Waveform& w, const FrameSpec& spec, std::size_t n_mels = 40,
                   std::size_t n_ceps = 13);

/// (1, T) tensor of sample values, optionally divided by 2^(B-1).
nn::Tensor raw_numeric(const audio::Waveform& w, bool normalize);

/// Channel-major (cols, rows) tensor suitable for a 1-D convolution over frames.
nn::Tensor to_channel_major(const FeatureMatrix& f);

container::Container pack(const FeatureMatrix& f, std::uint32_t sample_rate);
FeatureMatrix unpack_features(const container::Container& c);
void write_csv(const FeatureMatrix& f, const std::filesystem::path& path);

}  // namespace bitwave::features
