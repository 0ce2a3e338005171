#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bitwave/audio.hpp"
#include "bitwave/bitrep.hpp"
#include "bitwave/checkpoint.hpp"
#include "bitwave/features.hpp"
#include "bitwave/models.hpp"
#include "bitwave/nn.hpp"

namespace bitwave::train {

// --- Manifest ------------------------------------------------------------------

enum class Split { train, test };

const char* to_string(Split split);

struct ManifestEntry {
  std::filesystem::path path;
  std::string label;
  Split split = Split::train;
};

/// Rows of `path,label,split`. Relative paths resolve against the manifest's
/// directory. Labels are indexed in lexicographic order.
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> labels;

  std::size_t label_index(const std::string& label) const;
  std::size_t count(Split split) const;
};

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);

// --- Run configuration -----------------------------------------------------------

enum class Task { event, music_speech };
enum class Representation { bit_pulse, bit_image, raw, power_spectrum, mfcc };

const char* to_string(Task task);
const char* to_string(Representation rep);
Representation parse_representation(const std::string& name);
models::Architecture architecture_for(Representation rep);

struct RunConfig {
  Task task = Task::event;
  Representation representation = Representation::bit_pulse;
  std::size_t batch_size = 64;
  int epochs = 500;
  double learning_rate = 0.002;
  double momentum = 0.9;
  nn::LrPolicy lr_policy = nn::LrPolicy::constant;
  std::uint64_t seed = 1;

  std::uint32_t sample_rate = 16000;
  double segment_seconds = 0.0;  // 0: keep whole clips
  double crop_seconds = 0.0;     // 0: no fixed crop
  audio::SnrSpec eval_noise = audio::SnrSpec::clean();

  bitrep::BitMapping bit_mapping = bitrep::BitMapping::unipolar01;
  bool raw_normalize = true;
  std::size_t frame_length = 0;  // 0: 32 ms at sample_rate
  std::size_t hop = 0;           // 0: 10 ms at sample_rate
  features::Window window = features::Window::hamming;
  std::size_t n_mels = 40;
  std::size_t n_ceps = 13;

  models::CnnLstmConfig cnn_lstm{};
  models::CnnBigruConfig cnn_bigru{};

  double target_test_accuracy = 0.0;  // > 0: stop once reached
  bool strict = true;
  unsigned workers = 0;  // preprocessing threads; 0: hardware concurrency

  features::FrameSpec frame_spec() const;
  bool operator==(const RunConfig&) const = default;
};

/// Training conditions for the event task (CNN-LSTM on bit pulses).
RunConfig event_task_defaults();
/// Training conditions for the music/speech task (CNN-BiGRU on bit images).
RunConfig music_speech_defaults();

/// `key = value` lines; '#' starts a comment. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text, const RunConfig& base = event_task_defaults());
RunConfig load_run_config(const std::filesystem::path& path);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
std::string to_text(const RunConfig& cfg);

// --- Datasets ----------------------------------------------------------------------

struct Clip {
  std::string id;
  audio::Waveform wave;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Clip> clips;
  std::vector<std::string> labels;
};

/// Loads one split: resample to the configured rate, then segment or crop.
/// Unreadable files abort in strict mode and are skipped with a warning otherwise.
Dataset load_split(const Manifest& manifest, Split split, const RunConfig& cfg,
                   std::vector<std::string>* warnings = nullptr);

/// Per-clip noise seed: stable across runs, distinct across clips.
std::uint64_t clip_noise_seed(std::uint64_t global_seed, const std::string& clip_id);

/// Representation tensor fed to the model.
nn::Tensor represent(const audio::Waveform& wave, const RunConfig& cfg);

/// Index groups for one epoch, shuffled by a PRNG seeded with `epoch_seed`.
std::vector<std::vector<std::size_t>> batch_plan(std::size_t items, std::size_t batch_size,
                                                 std::uint64_t epoch_seed, bool shuffle = true);

struct Batch {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> labels;
  models::PaddedBatch inputs;
};

/// Lazily materializes batches of represented, time-padded items.
class BatchStream {
 public:
  BatchStream(const Dataset& data, const RunConfig& cfg, std::uint64_t epoch_seed, bool shuffle = true,
              const audio::SnrSpec& noise = audio::SnrSpec::clean());

  bool next(Batch& out);
  std::size_t batch_count() const noexcept { return plan_.size(); }

 private:
  const Dataset& data_;
  const RunConfig& cfg_;
  audio::SnrSpec noise_;
  std::vector<std::vector<std::size_t>> plan_;
  std::size_t cursor_ = 0;
};

// --- Training and evaluation -----------------------------------------------------

struct EpochRecord {
  int epoch = -1;  // -1: the initial model
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t count = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

struct Metrics {
  std::vector<std::string> labels;
  EpochRecord initial;
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_test_accuracy = 0.0;
  EvalResult final_test;  // evaluated with the best checkpoint
  double wall_clock_seconds = 0.0;
};

struct TrainResult {
  nn::Checkpoint best;
  nn::Checkpoint last;
  Metrics metrics;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Model configuration resolved against a dataset (input channels, classes).
RunConfig resolve_model(const RunConfig& cfg, const Dataset& sample, std::size_t num_classes);
models::Model build_model(const RunConfig& resolved);

TrainResult train(const RunConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch = {});
TrainResult train(const RunConfig& cfg, const Manifest& manifest, const EpochCallback& on_epoch = {});

EvalResult evaluate(models::Model& model, const RunConfig& cfg, const Dataset& data,
                    const audio::SnrSpec& noise = audio::SnrSpec::clean());

struct LoadedModel {
  RunConfig config;
  std::vector<std::string> labels;
  models::Model model;
};

std::string checkpoint_metadata(const RunConfig& resolved, const std::vector<std::string>& labels);
LoadedModel load_model(const nn::Checkpoint& ckpt);

/// Evaluates a checkpoint on one manifest split; labels map by name.
EvalResult evaluate(const nn::Checkpoint& ckpt, const Manifest& manifest, Split split,
                    const audio::SnrSpec& noise = audio::SnrSpec::clean(),
                    std::vector<std::string>* warnings = nullptr);

/// Re-indexes a dataset's labels onto `vocabulary`; unknown labels are data errors.
Dataset remap_labels(Dataset data, const std::vector<std::string>& vocabulary);

std::string epoch_json(const EpochRecord& r);
std::string metrics_json(const Metrics& m);

// --- Experiment suites -------------------------------------------------------------

enum class Suite { event_table3, music_speech_table4 };

Suite parse_suite(const std::string& name);
const char* to_string(Suite suite);

struct SuiteCell {
  std::string representation;
  std::string condition;
  std::string status;  // ok | skipped | failed
  std::string note;
  std::optional<double> accuracy;
  std::optional<double> reference;  // reference accuracy for this cell, if any
};

struct SuiteReport {
  std::string suite;
  std::vector<SuiteCell> cells;
  bool all_skipped() const;
  bool any_failed() const;
  std::string json() const;
  std::string table() const;
};

struct SuiteOptions {
  std::filesystem::path data_root;
  RunConfig base;  // task defaults already applied
  std::vector<Representation> representations;  // empty: the suite's default rows
  std::map<std::string, std::map<std::string, std::string>> overrides;  // representation -> key -> value
  std::filesystem::path output_dir;  // empty: no per-cell artifacts
};

SuiteOptions default_suite_options(Suite suite, const std::filesystem::path& data_root);
SuiteReport run_experiment_suite(Suite suite, const SuiteOptions& options);

// --- Synthetic two-class task ----------------------------------------------------------

struct SyntheticSpec {
  std::size_t clips = 200;
  std::size_t train_clips = 160;
  double seconds = 1.0;
  std::uint32_t sample_rate = 8000;
  std::uint64_t seed = 7;
};

/// Class "noise_burst": band-limited Gaussian noise gated into bursts.
/// Class "sweep": linear chirp between two random frequencies.
/// Classes alternate so both splits are balanced.
struct SyntheticTask {
  Dataset train;
  Dataset test;
};

SyntheticTask make_synthetic(const SyntheticSpec& spec);

/// Writes the synthetic clips as WAV files plus `manifest.csv` into `dir`.
std::filesystem::path write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace bitwave::train
