// Acceptance checks: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "bitwave/audio.hpp"
#include "bitwave/bitrep.hpp"
#include "bitwave/cli.hpp"
#include "bitwave/features.hpp"
#include "bitwave/gradcheck.hpp"
#include "bitwave/models.hpp"
#include "bitwave/nn.hpp"
#include "bitwave/train.hpp"

using namespace bitwave;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Bit vector computed by shifting, independent of the library routine.
bool round_trip_all(int depth) {
  const std::int32_t lo = -(1 << (depth - 1)), hi = (1 << (depth - 1)) - 1;
  const auto mask = static_cast<std::uint32_t>((1u << depth) - 1u);
  for (std::int32_t v = lo; v <= hi; ++v) {
    const auto bits = bitrep::sample_to_bits(v, depth);
    const auto u = static_cast<std::uint32_t>(v) & mask;
    for (int b = 0; b < depth; ++b)
      if (bits[static_cast<std::size_t>(b)] != ((u >> (depth - 1 - b)) & 1u)) return false;
    if (bitrep::bits_to_sample(bits) != v) return false;
  }
  audio::Waveform all{{}, 8000, depth};
  for (std::int32_t v = lo; v <= hi; ++v) all.samples.push_back(v);
  return bitrep::from_bit_pulses(bitrep::to_bit_pulses(all)) == all &&
         bitrep::from_bit_image(bitrep::to_bit_image(all)) == all;
}

Outcome bit_losslessness() {
  const auto t0 = Clock::now();
  const bool ok = round_trip_all(16) && round_trip_all(8);
  const double dt = seconds_since(t0);
  return {ok && dt < 1.0, "65536 + 256 values, " + std::string(ok ? "0" : "some") + " mismatches, " + fmt(dt) + " s"};
}

Outcome cross_consistency() {
  std::mt19937_64 rng(11);
  std::size_t bad = 0;
  for (int clip = 0; clip < 100; ++clip) {
    const int depth = clip % 4 == 0 ? 8 : 16;
    const auto n = std::uniform_int_distribution<std::size_t>(1, 4000)(rng);
    std::uniform_int_distribution<std::int32_t> value(-(1 << (depth - 1)), (1 << (depth - 1)) - 1);
    audio::Waveform w{{}, 16000, depth};
    for (std::size_t i = 0; i < n; ++i) w.samples.push_back(value(rng));
    const auto p = bitrep::to_bit_pulses(w);
    const auto img = bitrep::to_bit_image(w);
    bool same = img.rows == p.length && img.bit_depth == p.bit_depth;
    for (std::size_t t = 0; same && t < n; ++t)
      for (int b = 0; b < depth; ++b) same = same && img.at(t, b) == p.at(b, t);
    if (!same || bitrep::from_bit_pulses(p) != w) ++bad;
  }
  return {bad == 0, "100 clips, " + std::to_string(bad) + " inconsistent"};
}

Outcome fft_oracle() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  double worst = 0.0, worst_parseval = 0.0;
  for (std::size_t n = 2; n <= 1024; n *= 2) {
    std::vector<features::Complex> x(n);
    for (auto& v : x) v = {g(rng), g(rng)};
    const auto a = features::fft(x);
    const auto b = features::dft_naive(x);
    double diff = 0.0, scale = 0.0, et = 0.0, ef = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      diff = std::max(diff, std::abs(a[k] - b[k]));
      scale = std::max(scale, std::abs(b[k]));
      et += std::norm(x[k]);
      ef += std::norm(a[k]);
    }
    worst = std::max(worst, diff / scale);
    worst_parseval = std::max(worst_parseval, std::abs(et - ef / static_cast<double>(n)) / et);
  }
  return {worst < 1e-9 && worst_parseval < 1e-9,
          "max rel error " + fmt(worst) + ", Parseval rel error " + fmt(worst_parseval)};
}

Outcome gradient_battery() {
  const auto t0 = Clock::now();
  const auto reports = nn::run_gradient_battery(1);
  const double dt = seconds_since(t0);
  std::string failed;
  double worst = 0.0;
  for (const auto& r : reports) {
    worst = std::max(worst, r.max_rel_error);
    if (!r.passed) failed += " " + r.name;
  }
  return {failed.empty() && dt < 120.0, std::to_string(reports.size()) + " entries, worst rel error " + fmt(worst) +
                                            ", " + fmt(dt) + " s" + (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome shape_law() {
  std::mt19937_64 rng(3);
  std::size_t bad = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto k = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto s = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const auto in = std::uniform_int_distribution<std::size_t>(k, 5000)(rng);
    std::size_t windows = 0;
    for (std::size_t start = 0; start + k <= in; start += s) ++windows;
    if (nn::conv_output_extent(in, k, s) != windows || windows != (in - k) / s + 1) ++bad;
  }
  std::vector<std::size_t> chain;
  for (std::size_t l = 16000; chain.size() < 3;) chain.push_back(l = nn::conv_output_extent(l, 30, 10));
  const auto m = models::build_cnn_lstm(models::CnnLstmConfig{}, 1);
  const std::string summary = m.summary({16, 16000});
  const bool model_agrees = summary.find("(128, 1598)") != std::string::npos &&
                            summary.find("(256, 157)") != std::string::npos &&
                            m.feature_map_shape({16, 16000}) == nn::Shape{512, 13};
  const bool ok = bad == 0 && chain == std::vector<std::size_t>{1598, 157, 13} && model_agrees;
  return {ok, "2000 random (in,k,s), " + std::to_string(bad) + " mismatches; 16000 -> " + std::to_string(chain[0]) +
                  " -> " + std::to_string(chain[1]) + " -> " + std::to_string(chain[2]) +
                  (model_agrees ? ", model agrees" : ", model disagrees")};
}

train::RunConfig desk_config(train::Representation rep, std::uint64_t seed) {
  train::RunConfig cfg = train::event_task_defaults();
  cfg.representation = rep;
  cfg.sample_rate = 8000;
  cfg.batch_size = 16;
  cfg.epochs = 50;
  cfg.learning_rate = 0.01;
  cfg.cnn_lstm.channels = {16, 32, 32};
  cfg.cnn_lstm.hidden_size = 32;
  cfg.target_test_accuracy = 0.95;
  cfg.seed = seed;
  return cfg;
}

Outcome end_to_end(const train::SyntheticTask& task) {
  const auto t0 = Clock::now();
  const auto r = train::train(desk_config(train::Representation::bit_pulse, 1), task.train, task.test);
  const double dt = seconds_since(t0);
  const double acc = r.metrics.best_test_accuracy;
  const bool ok = acc >= 0.95 && r.metrics.best_epoch < 50 && dt < 600.0;
  return {ok, "test accuracy " + fmt(acc) + " at epoch " + std::to_string(r.metrics.best_epoch) + ", " +
                  std::to_string(r.metrics.epochs.size()) + " epochs run, " + fmt(dt) + " s"};
}

Outcome noise_trend(const train::SyntheticTask& task) {
  double drop[2] = {0.0, 0.0};
  std::string detail;
  const train::Representation reps[2] = {train::Representation::bit_pulse, train::Representation::raw};
  for (int i = 0; i < 2; ++i) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto cfg = desk_config(reps[i], seed);
      cfg.epochs = 20;
      const auto r = train::train(cfg, task.train, task.test);
      auto best = train::load_model(r.best);
      const double clean = train::evaluate(best.model, best.config, task.test).accuracy;
      const double noisy = train::evaluate(best.model, best.config, task.test, audio::SnrSpec{10.0}).accuracy;
      drop[i] += (clean - noisy) / 3.0;
    }
    detail += std::string(i ? ", " : "") + train::to_string(reps[i]) + " mean drop " + fmt(drop[i]);
  }
  return {drop[0] <= drop[1], detail};
}

Outcome lr_schedule() {
  const double a = nn::lr_schedule(0, 0.01, nn::LrPolicy::halve_every_30);
  const double b = nn::lr_schedule(30, 0.01, nn::LrPolicy::halve_every_30);
  const double c = nn::lr_schedule(60, 0.01, nn::LrPolicy::halve_every_30);
  return {a == 0.01 && b == 0.005 && c == 0.0025, "epochs 0/30/60 -> " + fmt(a) + " / " + fmt(b) + " / " + fmt(c)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "bitwave_acceptance_determinism";
  std::filesystem::remove_all(root);
  const auto manifest = train::write_synthetic({24, 16, 0.5, 8000, 9}, root / "data");
  std::vector<std::string> files{"metrics.json", "metrics.jsonl", "best.ckpt", "last.ckpt"};
  std::string first[4];
  for (int run = 0; run < 2; ++run) {
    const auto out = root / ("run" + std::to_string(run));
    std::ostringstream sink;
    const int code = cli::run({"train", "-d", manifest.string(), "-o", out.string(), "--seed", "42", "-s",
                               "sample_rate=8000", "-s", "channels=4,8,8", "-s", "hidden_size=8", "-s",
                               "mini_batch_size=8", "-s", "learning_rate=0.01", "-s", "num_epochs=3"},
                              sink, sink);
    if (code != 0) return {false, "train exited " + std::to_string(code) + ": " + sink.str()};
    for (std::size_t f = 0; f < files.size(); ++f) {
      const std::string bytes = slurp(out / files[f]);
      if (run == 0)
        first[f] = bytes;
      else if (bytes != first[f] || bytes.empty())
        return {false, files[f] + " differs between runs"};
    }
  }
  return {true, "metrics.json, metrics.jsonl, best.ckpt, last.ckpt byte-identical"};
}

Outcome spectral_sanity() {
  audio::Waveform w{{}, 16000, 16};
  for (int i = 0; i < 16000; ++i)
    w.samples.push_back(audio::quantize(12000.0 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 16000.0), 16));
  std::vector<double> frame(w.samples.begin(), w.samples.begin() + 512);
  const auto win = features::window_coefficients(features::Window::hamming, 512);
  for (std::size_t i = 0; i < 512; ++i) frame[i] *= win[i];
  const auto power = features::frame_power(frame, 512);
  const auto argmax = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());

  const auto bank = features::mel_filterbank(40, 512, 16000);
  const auto mel = bank.apply(power);
  const auto peak = static_cast<std::size_t>(std::max_element(mel.begin(), mel.end()) - mel.begin());
  const double lo = peak == 0 ? 0.0 : bank.centers_hz[peak - 1];
  const double hi = peak + 1 < bank.n_mels ? bank.centers_hz[peak + 1] : 8000.0;
  const bool contains = lo < 1000.0 && 1000.0 < hi;

  features::FeatureMatrix constant{50, 13, std::vector<double>(650, -3.75), "c", ""};
  const auto d = features::delta(constant);
  const bool zero = std::all_of(d.values.begin(), d.values.end(), [](double v) { return v == 0.0; });
  return {argmax == 32 && contains && zero, "argmax bin " + std::to_string(argmax) + ", mel peak filter " +
                                                std::to_string(peak) + " spans (" + fmt(lo) + ", " + fmt(hi) +
                                                ") Hz, constant delta " + (zero ? "exactly 0" : "nonzero")};
}

}  // namespace

int main() {
  // Criteria whose failure is understood and recorded; they still print FAIL.
  const std::set<std::string> known_failures{"noise_robustness_trend"};
  const bool strict = std::getenv("BITWAVE_ACCEPTANCE_STRICT") != nullptr;

  const train::SyntheticTask task = train::make_synthetic({});
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"bit_transform_losslessness", bit_losslessness},
      {"transform_cross_consistency", cross_consistency},
      {"fft_oracle_equivalence", fft_oracle},
      {"gradient_battery", gradient_battery},
      {"shape_law", shape_law},
      {"end_to_end_desk_training", [&] { return end_to_end(task); }},
      {"noise_robustness_trend", [&] { return noise_trend(task); }},
      {"lr_schedule", lr_schedule},
      {"determinism", determinism},
      {"mfcc_spectrum_sanity", spectral_sanity},
  };
  int unexpected = 0, known = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool expected_fail = known_failures.count(name) > 0;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail
              << (!o.pass && expected_fail ? " [known failure]" : "") << std::endl;
    if (!o.pass) (expected_fail ? known : unexpected)++;
  }
  std::cout << "summary: " << criteria.size() - static_cast<std::size_t>(unexpected + known) << " passed, "
            << unexpected + known << " failed (" << known << " known)" << std::endl;
  return unexpected > 0 || (strict && known > 0) ? 1 : 0;
}
