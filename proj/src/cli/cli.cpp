#include "bitwave/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bitwave/audio.hpp"
#include "bitwave/bitrep.hpp"
#include "bitwave/checkpoint.hpp"
#include "bitwave/container.hpp"
#include "bitwave/error.hpp"
#include "bitwave/features.hpp"
#include "bitwave/gradcheck.hpp"
#include "bitwave/models.hpp"
#include "bitwave/train.hpp"

namespace bitwave::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool print_config = false;
  std::string output;
};

struct TransformArgs {
  std::string input, kind = "bit-pulse", output;
  std::optional<unsigned> channel;
};

struct FeatureArgs {
  std::string input, kind = "mfcc", output;
  std::optional<std::uint32_t> rate;
  std::size_t frame_length = 0, hop = 0, n_mels = 40, n_ceps = 13;
  std::string window = "hamming";
  bool no_normalize = false;
};

struct TrainArgs {
  std::string config, data;
  std::vector<std::string> sets;
};

struct EvalArgs {
  std::string checkpoint, data, split = "test", snr = "clean";
};

struct SuiteArgs {
  std::string suite, data_root, config, representations;
  std::vector<std::string> sets;
};

struct InspectArgs {
  std::string input, model, config;
  std::size_t length = 16000;
  std::vector<std::string> sets;
};

struct GradArgs {
  std::string corrupt;
};

fs::path output_dir(const Common& c, const char* fallback) {
  if (!c.output.empty()) return c.output;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return fallback;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out << text;
}

std::pair<std::string, std::string> split_setting(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::config, "expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

audio::SnrSpec parse_snr(const std::string& s) {
  if (s == "clean") return audio::SnrSpec::clean();
  try {
    std::size_t used = 0;
    const double db = std::stod(s, &used);
    if (used == s.size() && std::isfinite(db)) return audio::SnrSpec{db};
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::config, "SNR must be 'clean' or a number of dB, got '" + s + "'");
}

train::RunConfig resolve_config(const std::string& path, const std::vector<std::string>& sets, const Common& c) {
  train::RunConfig cfg = path.empty() ? train::event_task_defaults() : train::load_run_config(path);
  std::string text;
  for (const auto& s : sets) {
    const auto [k, v] = split_setting(s);
    text += k + " = " + v + "\n";
  }
  if (!text.empty()) cfg = train::parse_run_config(text, cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

std::string shape_text(std::size_t a, std::size_t b) { return nn::to_string(nn::Shape{a, b}); }

int cmd_transform(const TransformArgs& a, std::ostream& out) {
  out << "input = " << a.input << "\nkind = " << a.kind << "\noutput = " << a.output << "\n";
  if (a.kind == "wav") {
    const auto box = container::read_file(a.input);
    audio::Waveform w;
    if (box.kind == container::PayloadKind::bit_pulses)
      w = bitrep::from_bit_pulses(container::unpack_pulses(box));
    else if (box.kind == container::PayloadKind::bit_image)
      w = bitrep::from_bit_image(container::unpack_image(box));
    else
      throw Error(ErrorKind::config, "container holds features, which cannot be inverted to audio");
    audio::save_wav(w, a.output);
    out << "wav " << w.size() << " samples at " << w.sample_rate << " Hz\n";
    return 0;
  }
  if (a.kind != "bit-pulse" && a.kind != "bit-image")
    throw Error(ErrorKind::config, "transform kind must be bit-pulse, bit-image or wav");
  const audio::Waveform w = audio::load_wav(a.input, audio::ChannelSelect{a.channel});
  if (a.kind == "bit-pulse") {
    const auto p = bitrep::to_bit_pulses(w);
    container::write_file(container::pack(p), a.output);
    out << "bit-pulse " << shape_text(static_cast<std::size_t>(p.bit_depth), p.length) << "\n";
  } else {
    const auto img = bitrep::to_bit_image(w);
    container::write_file(container::pack(img), a.output);
    out << "bit-image " << shape_text(img.rows, img.cols()) << "\n";
  }
  return 0;
}

int cmd_features(const FeatureArgs& a, std::ostream& out) {
  audio::Waveform w = audio::load_wav(a.input);
  if (a.rate && *a.rate != w.sample_rate) w = audio::resample(w, *a.rate);
  train::RunConfig cfg;
  cfg.sample_rate = w.sample_rate;
  cfg.frame_length = a.frame_length;
  cfg.hop = a.hop;
  train::apply_setting(cfg, "window", a.window);
  const auto spec = cfg.frame_spec();
  out << "input = " << a.input << "\nkind = " << a.kind << "\nsample_rate = " << w.sample_rate
      << "\nframe_length = " << spec.frame_length << "\nhop = " << spec.hop << "\nwindow = " << a.window << "\n";
  features::FeatureMatrix f;
  if (a.kind == "mfcc") {
    out << "n_mels = " << a.n_mels << "\nn_ceps = " << a.n_ceps << "\n";
    f = features::mfcc(w, spec, a.n_mels, a.n_ceps);
  } else if (a.kind == "power_spectrum") {
    f = features::power_spectrum_features(w, spec);
  } else if (a.kind == "raw") {
    const nn::Tensor t = features::raw_numeric(w, !a.no_normalize);
    f.rows = t.dim(1);
    f.cols = 1;
    f.values = t.storage();
    f.name = "raw";
  } else {
    throw Error(ErrorKind::config, "feature kind must be mfcc, power_spectrum or raw");
  }
  if (fs::path(a.output).extension() == ".csv")
    features::write_csv(f, a.output);
  else
    container::write_file(features::pack(f, w.sample_rate), a.output);
  out << f.name << " " << shape_text(f.rows, f.cols) << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  const train::RunConfig cfg = resolve_config(a.config, a.sets, c);
  out << train::to_text(cfg);
  if (c.print_config) return 0;
  if (a.data.empty()) throw Error(ErrorKind::config, "--data is required");
  out << "seed = " << cfg.seed << std::endl;
  const train::Manifest manifest = train::load_manifest(a.data);
  const fs::path dir = output_dir(c, "bitwave_runs");
  fs::create_directories(dir);
  std::ofstream lines(dir / "metrics.jsonl", std::ios::binary);
  if (!lines) throw Error(ErrorKind::io_parse, "cannot write into '" + dir.string() + "'");
  const auto result = train::train(cfg, manifest, [&](const train::EpochRecord& r) {
    const std::string j = train::epoch_json(r);
    lines << j << "\n";
    lines.flush();
    out << j << std::endl;
  });
  write_text(dir / "config.txt", train::to_text(cfg));
  write_text(dir / "metrics.json", train::metrics_json(result.metrics));
  write_text(dir / "timing.json",
             nlohmann::json{{"wall_clock_seconds", result.metrics.wall_clock_seconds}}.dump() + "\n");
  nn::write_checkpoint(result.best, dir / "best.ckpt");
  nn::write_checkpoint(result.last, dir / "last.ckpt");
  out << "best epoch " << result.metrics.best_epoch << ", test accuracy " << result.metrics.final_test.accuracy
      << "\noutputs in " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  if (a.split != "train" && a.split != "test") throw Error(ErrorKind::config, "--split must be train or test");
  const audio::SnrSpec noise = parse_snr(a.snr);
  train::LoadedModel lm = train::load_model(nn::read_checkpoint(a.checkpoint));
  if (c.seed) lm.config.seed = *c.seed;
  if (c.workers) lm.config.workers = *c.workers;
  out << "checkpoint = " << a.checkpoint << "\ndata = " << a.data << "\nsplit = " << a.split << "\nsnr = " << a.snr
      << "\nseed = " << lm.config.seed << "\n";
  if (c.print_config) {
    out << train::to_text(lm.config);
    return 0;
  }
  std::vector<std::string> warnings;
  const auto manifest = train::load_manifest(a.data);
  const auto data = train::remap_labels(
      train::load_split(manifest, a.split == "train" ? train::Split::train : train::Split::test, lm.config, &warnings),
      lm.labels);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  const auto r = train::evaluate(lm.model, lm.config, data, noise);
  nlohmann::json doc = {{"split", a.split},
                        {"snr", a.snr},
                        {"labels", lm.labels},
                        {"accuracy", r.accuracy},
                        {"count", r.count},
                        {"confusion", r.confusion}};
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!c.output.empty() || std::getenv(kOutputEnv)) write_text(output_dir(c, ".") / "eval.json", text);
  return 0;
}

int cmd_suite(const SuiteArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const train::Suite suite = train::parse_suite(a.suite);
  train::SuiteOptions opt = train::default_suite_options(suite, a.data_root);
  if (!a.config.empty()) opt.base = train::load_run_config(a.config);
  if (c.seed) opt.base.seed = *c.seed;
  if (c.workers) opt.base.workers = *c.workers;
  if (!a.representations.empty()) {
    opt.representations.clear();
    std::istringstream in(a.representations);
    std::string r;
    while (std::getline(in, r, ',')) opt.representations.push_back(train::parse_representation(r));
  }
  for (const auto& s : a.sets) {
    auto [k, v] = split_setting(s);
    const auto colon = k.find(':');
    if (colon == std::string::npos) {
      train::apply_setting(opt.base, k, v);
    } else {
      train::parse_representation(k.substr(0, colon));
      opt.overrides[k.substr(0, colon)][k.substr(colon + 1)] = v;
    }
  }
  opt.output_dir = output_dir(c, "bitwave_suite");
  out << "suite = " << a.suite << "\ndata_root = " << a.data_root << "\n" << train::to_text(opt.base);
  for (const auto& [rep, kv] : opt.overrides)
    for (const auto& [k, v] : kv) out << rep << ":" << k << " = " << v << "\n";
  if (c.print_config) return 0;
  out << "seed = " << opt.base.seed << std::endl;
  const auto report = train::run_experiment_suite(suite, opt);
  write_text(opt.output_dir / "report.json", report.json());
  write_text(opt.output_dir / "report.txt", report.table());
  out << report.table();
  if (report.all_skipped()) {
    err << "warning: no datasets found under '" << a.data_root << "'; every cell was skipped\n";
    return 0;
  }
  return report.any_failed() ? exit_code_for(ErrorKind::data) : 0;
}

void inspect_file(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_parse, "cannot open '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  const std::string m(magic, 4);
  if (m == "RIFF") {
    const auto info = audio::probe_wav(path);
    out << "wav format " << info.format_tag << ", " << info.channels << " channel(s), " << info.sample_rate << " Hz, "
        << info.bits_per_sample << " bit, " << info.frames << " frames\n";
  } else if (m == "BWRP") {
    const auto box = container::read_file(path);
    const char* kind = box.kind == container::PayloadKind::bit_pulses  ? "bit-pulse"
                       : box.kind == container::PayloadKind::bit_image ? "bit-image"
                                                                       : "features";
    out << kind << " " << shape_text(box.rows, box.cols) << ", bit depth " << box.bit_depth << ", " << box.sample_rate
        << " Hz\n";
    if (!box.meta.empty()) out << "meta: " << box.meta << "\n";
  } else if (m == "BWCK") {
    const auto ckpt = nn::read_checkpoint(path);
    std::size_t count = 0;
    for (const auto& p : ckpt.params) count += p.value.size();
    out << "checkpoint, " << ckpt.params.size() << " tensors, " << count << " parameters"
        << (ckpt.momentum ? ", with optimizer state" : "") << "\nlayers:\n";
    for (std::size_t i = 0; i < ckpt.layer_specs.size(); ++i) out << "  [" << i << "] " << ckpt.layer_specs[i] << "\n";
    out << "metadata:\n" << ckpt.metadata;
  } else {
    throw Error(ErrorKind::io_parse, "unrecognized file format: '" + path + "'");
  }
}

int cmd_inspect(const InspectArgs& a, const Common& c, std::ostream& out) {
  if (!a.input.empty()) {
    inspect_file(a.input, out);
    return 0;
  }
  if (a.model.empty()) throw Error(ErrorKind::config, "inspect needs a file or --model");
  train::RunConfig cfg = resolve_config(a.config, a.sets, c);
  const std::uint64_t seed = cfg.seed;
  if (a.model == "cnn_lstm") {
    auto m = models::build_cnn_lstm(cfg.cnn_lstm, seed);
    out << m.summary({cfg.cnn_lstm.in_channels, a.length});
    out << "receptive field: " << m.receptive_field() << " samples\nparameters: " << models::count_parameters(m)
        << "\n";
  } else if (a.model == "cnn_bigru") {
    auto m = models::build_cnn_bigru(cfg.cnn_bigru, seed);
    out << m.summary({a.length, cfg.cnn_bigru.bit_width});
    out << "receptive field: " << m.receptive_field() << " samples\nparameters: " << models::count_parameters(m)
        << "\n";
  } else {
    throw Error(ErrorKind::config, "--model must be cnn_lstm or cnn_bigru");
  }
  return 0;
}

int cmd_gradcheck(const GradArgs& a, const Common& c, std::ostream& out) {
  const std::uint64_t seed = c.seed.value_or(1);
  out << "seed = " << seed << "\n";
  if (!a.corrupt.empty()) out << "corrupt = " << a.corrupt << "\n";
  const auto reports = nn::run_gradient_battery(seed, a.corrupt);
  bool ok = true;
  for (const auto& r : reports) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_rel_error=" << r.max_rel_error
        << " tol=" << r.tolerance << "\n";
    for (const auto& t : r.tensors) out << "    " << t.name << " " << t.max_rel_error << "\n";
    ok = ok && r.passed;
  }
  if (a.corrupt.empty() == false &&
      std::none_of(reports.begin(), reports.end(), [&](const auto& r) { return r.name == a.corrupt; }))
    throw Error(ErrorKind::config, "no battery entry named '" + a.corrupt + "'");
  return ok ? 0 : exit_code_for(ErrorKind::numerical);
}

void add_common(CLI::App* sub, Common& c, bool output = true) {
  sub->add_option("--seed", c.seed, "Global seed; every random stream derives from it");
  sub->add_option("--workers", c.workers, "Preprocessing threads (default: all cores)");
  sub->add_flag("--print-config", c.print_config, "Print the resolved configuration and exit");
  if (output) sub->add_option("-o,--output", c.output, std::string("Output directory (default: $") + kOutputEnv + ")");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bitwave: bit-representation audio classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bitwave 0.1.0");

  Common common;
  TransformArgs ta;
  FeatureArgs fa;
  TrainArgs tra;
  EvalArgs ea;
  SuiteArgs sa;
  InspectArgs ia;
  GradArgs ga;

  auto* transform = app.add_subcommand("transform", "Write the bit-pulse or bit-image container of a WAV file");
  transform->add_option("input", ta.input, "Input WAV (or container for --kind wav)")->required();
  transform->add_option("-k,--kind", ta.kind, "bit-pulse | bit-image | wav")
      ->check(CLI::IsMember({"bit-pulse", "bit-image", "wav"}));
  transform->add_option("-o,--output", ta.output, "Output path")->required();
  transform->add_option("--channel", ta.channel, "Use one channel instead of the mono average");

  auto* feats = app.add_subcommand("features", "Compute a feature matrix from a WAV file");
  feats->add_option("input", fa.input, "Input WAV")->required();
  feats->add_option("-k,--kind", fa.kind, "mfcc | power_spectrum | raw")
      ->check(CLI::IsMember({"mfcc", "power_spectrum", "raw"}));
  feats->add_option("-o,--output", fa.output, "Output path (.csv for text, container otherwise)")->required();
  feats->add_option("--rate", fa.rate, "Resample to this rate first");
  feats->add_option("--frame-length", fa.frame_length, "Frame length in samples (default 32 ms)");
  feats->add_option("--hop", fa.hop, "Hop in samples (default 10 ms)");
  feats->add_option("--window", fa.window, "hamming | hann | rect");
  feats->add_option("--n-mels", fa.n_mels, "Mel filters");
  feats->add_option("--n-ceps", fa.n_ceps, "Cepstral coefficients");
  feats->add_flag("--no-normalize", fa.no_normalize, "Raw: keep integer sample values");

  auto* tr = app.add_subcommand("train", "Train a classifier from a manifest");
  tr->add_option("-c,--config", tra.config, "Run configuration file");
  tr->add_option("-d,--data", tra.data, "Manifest CSV (path,label,split)");
  tr->add_option("-s,--set", tra.sets, "Override a configuration key: key=value");
  add_common(tr, common);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  ev->add_option("checkpoint", ea.checkpoint, "Checkpoint file")->required();
  ev->add_option("-d,--data", ea.data, "Manifest CSV")->required();
  ev->add_option("--split", ea.split, "train | test");
  ev->add_option("--snr", ea.snr, "clean or SNR in dB of white noise added before the transform");
  add_common(ev, common);

  auto* su = app.add_subcommand("suite", "Run an experiment grid and write a report");
  su->add_option("suite", sa.suite, "event_table3 | music_speech_table4")->required();
  su->add_option("-r,--data-root", sa.data_root, "Dataset root")->required();
  su->add_option("-c,--config", sa.config, "Base run configuration");
  su->add_option("--representations", sa.representations, "Comma-separated representation rows");
  su->add_option("-s,--set", sa.sets, "key=value, or representation:key=value for one row");
  add_common(su, common);

  auto* in = app.add_subcommand("inspect", "Describe a WAV, container or checkpoint, or a model's shapes");
  in->add_option("input", ia.input, "File to describe");
  in->add_option("--model", ia.model, "cnn_lstm | cnn_bigru");
  in->add_option("--length", ia.length, "Input length in samples for --model");
  in->add_option("-c,--config", ia.config, "Run configuration for --model");
  in->add_option("-s,--set", ia.sets, "key=value override for --model");
  in->add_option("--seed", common.seed, "Initialization seed for --model");

  auto* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient battery");
  gc->add_option("--corrupt", ga.corrupt, "Debug: break the gradient of one battery entry");
  gc->add_option("--seed", common.seed, "Seed for inputs and probes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? 0 : exit_code_for(ErrorKind::config);
  }

  try {
    if (*transform) return cmd_transform(ta, out);
    if (*feats) return cmd_features(fa, out);
    if (*tr) return cmd_train(tra, common, out);
    if (*ev) return cmd_eval(ea, common, out, err);
    if (*su) return cmd_suite(sa, common, out, err);
    if (*in) return cmd_inspect(ia, common, out);
    if (*gc) return cmd_gradcheck(ga, common, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return exit_code_for(ErrorKind::io_parse);
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return exit_code_for(ErrorKind::config);
  }
  return exit_code_for(ErrorKind::config);
}

}  // namespace bitwave::cli
