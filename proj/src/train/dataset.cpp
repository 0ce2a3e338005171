#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "bitwave/error.hpp"
#include "bitwave/seed.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

struct Loaded {
  std::vector<Clip> clips;
  std::exception_ptr error;
  std::string message;
};

Loaded load_entry(const ManifestEntry& entry, std::size_t label, const RunConfig& cfg) {
  Loaded out;
  try {
    audio::Waveform w = audio::load_wav(entry.path);
    if (w.sample_rate != cfg.sample_rate) w = audio::resample(w, cfg.sample_rate);
    const std::string id = entry.path.generic_string();
    if (cfg.segment_seconds > 0.0) {
      auto parts = audio::segment(w, cfg.segment_seconds);
      for (std::size_t k = 0; k < parts.size(); ++k)
        out.clips.push_back({id + "#" + std::to_string(k), std::move(parts[k]), label});
    } else {
      if (cfg.crop_seconds > 0.0) {
        const auto len = static_cast<std::size_t>(std::floor(cfg.crop_seconds * cfg.sample_rate));
        if (len == 0) throw Error(ErrorKind::config, "crop length must cover at least one sample");
        if (w.samples.size() > len) w.samples.resize(len);
      }
      if (w.samples.empty()) throw Error(ErrorKind::data, "clip '" + id + "' has no samples");
      out.clips.push_back({id, std::move(w), label});
    }
  } catch (const std::exception& e) {
    out.error = std::current_exception();
    out.message = entry.path.string() + ": " + e.what();
  }
  return out;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Shortest time extent the model accepts.
std::size_t min_time_extent(const RunConfig& cfg) {
  std::size_t r = 1;
  if (architecture_for(cfg.representation) == models::Architecture::cnn_lstm) {
    for (int i = 0; i < 3; ++i) r = (r - 1) * cfg.cnn_lstm.stride + cfg.cnn_lstm.kernel;
  } else {
    for (auto it = cfg.cnn_bigru.stages.rbegin(); it != cfg.cnn_bigru.stages.rend(); ++it)
      r = (r - 1) * it->stride_time + it->kernel_time;
  }
  return r;
}

nn::Tensor pad_time(nn::Tensor x, std::size_t time_axis, std::size_t min_len) {
  const std::size_t len = x.dim(time_axis);
  if (len >= min_len) return x;
  if (time_axis == 0) {
    auto v = x.storage();
    v.resize(min_len * x.dim(1), 0.0);
    return nn::Tensor({min_len, x.dim(1)}, std::move(v));
  }
  nn::Tensor out({x.dim(0), min_len});
  for (std::size_t c = 0; c < x.dim(0); ++c) std::copy_n(x.data() + c * len, len, out.data() + c * min_len);
  return out;
}

}  // namespace

Dataset load_split(const Manifest& manifest, Split split, const RunConfig& cfg, std::vector<std::string>* warnings) {
  std::vector<const ManifestEntry*> todo;
  for (const auto& e : manifest.entries)
    if (e.split == split) todo.push_back(&e);

  std::vector<Loaded> results(todo.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++)
      results[i] = load_entry(*todo[i], manifest.label_index(todo[i]->label), cfg);
  };
  const unsigned n = worker_count(cfg.workers, todo.size());
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  pool.clear();

  Dataset data;
  data.labels = manifest.labels;
  for (auto& r : results) {
    if (r.error) {
      if (cfg.strict) std::rethrow_exception(r.error);
      if (warnings) warnings->push_back("skipped " + r.message);
      continue;
    }
    for (auto& c : r.clips) data.clips.push_back(std::move(c));
  }
  return data;
}

std::uint64_t clip_noise_seed(std::uint64_t global_seed, const std::string& clip_id) {
  return seed::combine(seed::derive(global_seed, "eval_noise"), seed::hash(clip_id));
}

nn::Tensor represent(const audio::Waveform& wave, const RunConfig& cfg) {
  switch (cfg.representation) {
    case Representation::bit_pulse:
      return bitrep::bits_to_numeric(bitrep::to_bit_pulses(wave), cfg.bit_mapping);
    case Representation::bit_image:
      return bitrep::bits_to_numeric(bitrep::to_bit_image(wave), cfg.bit_mapping);
    case Representation::raw:
      return features::raw_numeric(wave, cfg.raw_normalize);
    case Representation::power_spectrum:
      return features::to_channel_major(features::power_spectrum_features(wave, cfg.frame_spec()));
    case Representation::mfcc:
      return features::to_channel_major(features::mfcc(wave, cfg.frame_spec(), cfg.n_mels, cfg.n_ceps));
  }
  throw Error(ErrorKind::config, "unknown representation");
}

std::vector<std::vector<std::size_t>> batch_plan(std::size_t items, std::size_t batch_size, std::uint64_t epoch_seed,
                                                 bool shuffle) {
  if (batch_size == 0) throw Error(ErrorKind::config, "batch size must be positive");
  std::vector<std::size_t> order(items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t i = 0; i < items; i += batch_size)
    plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                      order.begin() + static_cast<std::ptrdiff_t>(std::min(items, i + batch_size)));
  return plan;
}

BatchStream::BatchStream(const Dataset& data, const RunConfig& cfg, std::uint64_t epoch_seed, bool shuffle,
                         const audio::SnrSpec& noise)
    : data_(data), cfg_(cfg), noise_(noise), plan_(batch_plan(data.clips.size(), cfg.batch_size, epoch_seed, shuffle)) {}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= plan_.size()) return false;
  const auto& idx = plan_[cursor_++];
  const std::size_t axis = architecture_for(cfg_.representation) == models::Architecture::cnn_lstm ? 1 : 0;
  const std::size_t min_len = min_time_extent(cfg_);
  std::vector<nn::Tensor> items;
  items.reserve(idx.size());
  out.indices = idx;
  out.labels.clear();
  for (std::size_t i : idx) {
    const Clip& clip = data_.clips.at(i);
    out.labels.push_back(clip.label);
    if (noise_.is_clean()) {
      items.push_back(pad_time(represent(clip.wave, cfg_), axis, min_len));
      continue;
    }
    audio::Waveform noisy;
    try {
      noisy = audio::mix_noise(clip.wave, noise_, clip_noise_seed(cfg_.seed, clip.id));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_snr) throw;
      noisy = clip.wave;  // silent clip: SNR is undefined, keep it clean
    }
    items.push_back(pad_time(represent(noisy, cfg_), axis, min_len));
  }
  out.inputs = models::pad_batch(items, axis);
  return true;
}

}  // namespace bitwave::train
