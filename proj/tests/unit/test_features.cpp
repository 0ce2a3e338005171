#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "bitwave/error.hpp"
#include "bitwave/features.hpp"

using namespace bitwave;
using features::Complex;

namespace {

audio::Waveform tone(double hz, std::uint32_t rate, std::size_t n, double amp = 16000.0) {
  audio::Waveform w{{}, rate, 16};
  for (std::size_t i = 0; i < n; ++i)
    w.samples.push_back(audio::quantize(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate), 16));
  return w;
}

std::vector<Complex> random_complex(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<Complex> x(n);
  for (auto& v : x) v = {g(rng), g(rng)};
  return x;
}

// Regression delta written from the textbook formula with clamped indices.
double oracle_delta(const features::FeatureMatrix& f, std::size_t r, std::size_t c, int n) {
  const auto clamp = [&](long i) { return static_cast<std::size_t>(std::clamp<long>(i, 0, long(f.rows) - 1)); };
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= n; ++k) {
    num += k * (f.at(clamp(long(r) + k), c) - f.at(clamp(long(r) - k), c));
    den += 2.0 * k * k;
  }
  return num / den;
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  std::mt19937_64 rng(1);
  for (std::size_t n = 1; n <= 256; n *= 2) {
    const auto x = random_complex(rng, n);
    const auto a = features::fft(x), b = features::dft_naive(x);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      err = std::max(err, std::abs(a[k] - b[k]));
      scale = std::max(scale, std::abs(b[k]));
    }
    EXPECT_LT(err / scale, 1e-12) << n;
  }
}

TEST(Fft, ImpulseAndDc) {
  std::vector<Complex> impulse(8, 0.0);
  impulse[0] = 1.0;
  for (const auto& v : features::fft(impulse)) EXPECT_NEAR(std::abs(v - Complex(1.0)), 0.0, 1e-15);
  std::vector<Complex> dc(16, 1.0);
  const auto spec = features::fft(dc);
  EXPECT_NEAR(spec[0].real(), 16.0, 1e-12);
  for (std::size_t k = 1; k < 16; ++k) EXPECT_NEAR(std::abs(spec[k]), 0.0, 1e-12);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<Complex> x(12);
  EXPECT_THROW(features::fft(x), Error);
  EXPECT_FALSE(features::is_power_of_two(0));
  EXPECT_TRUE(features::is_power_of_two(1024));
}

TEST(Spectrum, ToneAtOneKilohertzPeaksAtBin32) {
  const auto w = tone(1000.0, 16000, 16000);
  const auto f = features::power_spectrum_features(w, features::FrameSpec::for_rate(16000));
  ASSERT_EQ(f.cols, 768u);
  EXPECT_EQ(f.rows, features::frame_count(16000, {512, 160, features::Window::hamming}));
  for (std::size_t r = 0; r < f.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 256; ++c)
      if (f.at(r, c) > f.at(r, best)) best = c;
    ASSERT_EQ(best + 1, 32u) << "frame " << r;  // column c holds bin c+1
  }
}

TEST(Spectrum, LogFloorOnSilence) {
  audio::Waveform silent{std::vector<std::int32_t>(2000, 0), 16000, 16};
  const auto f = features::power_spectrum_features(silent, features::FrameSpec::for_rate(16000));
  for (std::size_t c = 0; c < 256; ++c) EXPECT_DOUBLE_EQ(f.at(0, c), std::log(features::kLogFloor));
  for (std::size_t c = 256; c < 768; ++c) EXPECT_EQ(f.at(0, c), 0.0);
}

TEST(Spectrum, Errors) {
  const auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::numerical;
  };
  audio::Waveform shortw{std::vector<std::int32_t>(100, 1), 16000, 16};
  EXPECT_EQ(kind([&] { features::power_spectrum_features(shortw, features::FrameSpec::for_rate(16000)); }),
            ErrorKind::too_short);
  audio::Waveform w{std::vector<std::int32_t>(4000, 1), 16000, 16};
  EXPECT_EQ(kind([&] { features::power_spectrum_features(w, {1024, 160, features::Window::hamming}); }),
            ErrorKind::config);
}

TEST(Mel, HtkScale) {
  EXPECT_NEAR(features::hz_to_mel(1000.0), 2595.0 * std::log10(1.0 + 1000.0 / 700.0), 1e-12);
  EXPECT_NEAR(features::hz_to_mel(1000.0), 1000.0, 0.05);
  for (double hz : {0.0, 50.0, 440.0, 7999.0}) EXPECT_NEAR(features::mel_to_hz(features::hz_to_mel(hz)), hz, 1e-9);
}

TEST(Mel, PeakFilterContainsOneKilohertz) {
  const auto bank = features::mel_filterbank(40, 512, 16000);
  ASSERT_EQ(bank.n_bins, 257u);
  // Independent centre frequencies: 42 points equally spaced in mel over [0, 8000] Hz.
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  std::size_t nearest = 0;
  double nearest_gap = 1e9;
  for (std::size_t m = 0; m < 40; ++m) {
    const double mel = top * static_cast<double>(m + 1) / 41.0;
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    EXPECT_NEAR(bank.centers_hz[m], hz, 1e-6);
    if (std::abs(hz - 1000.0) < nearest_gap) {
      nearest_gap = std::abs(hz - 1000.0);
      nearest = m;
    }
  }
  const auto w = tone(1000.0, 16000, 512);
  std::vector<double> frame(w.samples.begin(), w.samples.end());
  const auto window = features::window_coefficients(features::Window::hamming, 512);
  for (std::size_t i = 0; i < 512; ++i) frame[i] *= window[i];
  const auto mel = bank.apply(features::frame_power(frame, 512));
  const auto peak = static_cast<std::size_t>(std::max_element(mel.begin(), mel.end()) - mel.begin());
  EXPECT_EQ(peak, nearest);
  EXPECT_GT(bank.weights[peak * bank.n_bins + 32], 0.0);
}

TEST(Dct, OrthonormalAgainstFormula) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(40);
  for (auto& v : x) v = g(rng);
  const auto y = features::dct_ii(x);
  const double n = 40.0;
  double ex = 0.0, ey = 0.0;
  for (std::size_t k = 0; k < 40; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < 40; ++i) s += x[i] * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    s *= std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    EXPECT_NEAR(y[k], s, 1e-12);
    ex += x[k] * x[k];
    ey += y[k] * y[k];
  }
  EXPECT_NEAR(ex, ey, 1e-9);
}

TEST(Delta, ConstantIsExactlyZero) {
  features::FeatureMatrix f{20, 3, std::vector<double>(60, 4.25), "c", ""};
  const auto d = features::delta(f);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
  const auto full = features::append_deltas(f);
  ASSERT_EQ(full.cols, 9u);
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 3; c < 9; ++c) EXPECT_EQ(full.at(r, c), 0.0);
}

TEST(Delta, MatchesRegressionOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  features::FeatureMatrix f{17, 4, std::vector<double>(68), "r", ""};
  for (auto& v : f.values) v = g(rng);
  for (int n : {1, 2, 3}) {
    const auto d = features::delta(f, n);
    for (std::size_t r = 0; r < f.rows; ++r)
      for (std::size_t c = 0; c < f.cols; ++c) EXPECT_NEAR(d.at(r, c), oracle_delta(f, r, c, n), 1e-12);
  }
}

TEST(Delta, RampSlopeInInterior) {
  features::FeatureMatrix f{10, 1, {}, "ramp", ""};
  for (int i = 0; i < 10; ++i) f.values.push_back(i);
  const auto d = features::delta(f);
  for (std::size_t r = 2; r < 8; ++r) EXPECT_DOUBLE_EQ(d.at(r, 0), 1.0);
}

TEST(Mfcc, ShapeAndFiniteness) {
  const auto w = tone(440.0, 8000, 8000);
  const auto spec = features::FrameSpec::for_rate(8000);
  EXPECT_EQ(spec.frame_length, 256u);
  EXPECT_EQ(spec.hop, 80u);
  const auto f = features::mfcc(w, spec);
  EXPECT_EQ(f.cols, 39u);
  EXPECT_EQ(f.rows, features::frame_count(8000, spec));
  for (double v : f.values) EXPECT_TRUE(std::isfinite(v));
  const auto t = features::to_channel_major(f);
  EXPECT_EQ(t.shape(), (nn::Shape{39, f.rows}));
  EXPECT_EQ(t.at(5, 7), f.at(7, 5));
}

TEST(Raw, Normalization) {
  audio::Waveform w{{-32768, 16384, 0}, 8000, 16};
  const auto n = features::raw_numeric(w, true);
  EXPECT_EQ(n.shape(), (nn::Shape{1, 3}));
  EXPECT_EQ(n[0], -1.0);
  EXPECT_EQ(n[1], 0.5);
  EXPECT_EQ(features::raw_numeric(w, false)[0], -32768.0);
}

TEST(Features, ContainerRoundTrip) {
  const auto f = features::mfcc(tone(300.0, 16000, 4000), features::FrameSpec::for_rate(16000));
  const auto back = features::unpack_features(container::decode(container::encode(features::pack(f, 16000))));
  EXPECT_EQ(back.rows, f.rows);
  EXPECT_EQ(back.cols, f.cols);
  EXPECT_EQ(back.values, f.values);
}
