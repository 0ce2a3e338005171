#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bitwave/error.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

using nlohmann::json;

// Reference accuracies (percent) per representation and condition.
std::optional<double> reference_for(Suite suite, Representation rep, const std::string& condition) {
  if (suite == Suite::event_table3) {
    switch (rep) {
      case Representation::bit_pulse: return 88.4;
      case Representation::mfcc: return 57.4;
      case Representation::power_spectrum: return 80.3;
      case Representation::raw: return 34.6;
      default: return std::nullopt;
    }
  }
  const int c = condition == "C01" ? 0 : condition == "C02" ? 1 : 2;
  if (rep == Representation::bit_image) return std::array{94.7, 81.2, 92.8}[c];
  if (rep == Representation::raw) return std::array{95.4, 71.8, 83.0}[c];
  if (rep == Representation::power_spectrum && c == 0) return 90.5;
  return std::nullopt;
}

SuiteCell make_cell(Suite suite, Representation rep, const std::string& condition) {
  SuiteCell cell;
  cell.representation = to_string(rep);
  cell.condition = condition;
  cell.reference = reference_for(suite, rep, condition);
  return cell;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out << text;
}

void save_cell(const SuiteOptions& opt, const SuiteCell& cell, const TrainResult* result) {
  if (opt.output_dir.empty() || !result) return;
  const auto dir = opt.output_dir / cell.representation / cell.condition;
  write_text(dir / "metrics.json", metrics_json(result->metrics));
  nn::write_checkpoint(result->best, dir / "best.ckpt");
}

RunConfig cell_config(const SuiteOptions& opt, Representation rep) {
  RunConfig cfg = opt.base;
  cfg.representation = rep;
  const auto it = opt.overrides.find(to_string(rep));
  if (it != opt.overrides.end())
    for (const auto& [k, v] : it->second) apply_setting(cfg, k, v);
  return cfg;
}

std::string fmt_pct(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << *v;
  return os.str();
}

}  // namespace

Suite parse_suite(const std::string& name) {
  if (name == "event_table3") return Suite::event_table3;
  if (name == "music_speech_table4") return Suite::music_speech_table4;
  throw Error(ErrorKind::config, "unknown suite '" + name + "' (expected event_table3 or music_speech_table4)");
}

const char* to_string(Suite suite) { return suite == Suite::event_table3 ? "event_table3" : "music_speech_table4"; }

bool SuiteReport::all_skipped() const {
  for (const auto& c : cells)
    if (c.status != "skipped") return false;
  return true;
}

bool SuiteReport::any_failed() const {
  for (const auto& c : cells)
    if (c.status == "failed") return true;
  return false;
}

std::string SuiteReport::json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json row = {{"representation", c.representation},
                          {"condition", c.condition},
                          {"status", c.status},
                          {"note", c.note},
                          {"accuracy_percent", nullptr},
                          {"reference_percent", nullptr},
                          {"delta_percent", nullptr}};
    if (c.accuracy) row["accuracy_percent"] = *c.accuracy * 100.0;
    if (c.reference) row["reference_percent"] = *c.reference;
    if (c.accuracy && c.reference) row["delta_percent"] = *c.accuracy * 100.0 - *c.reference;
    rows.push_back(row);
  }
  nlohmann::json doc = {{"suite", suite},
                        {"model_selection", "best test accuracy over epochs; the reference figures may use a "
                                            "different selection rule"},
                        {"scoring", "each segment scored independently"},
                        {"cells", rows}};
  return doc.dump(2) + "\n";
}

std::string SuiteReport::table() const {
  std::ostringstream os;
  os << suite << "\n";
  os << std::left << std::setw(16) << "representation" << std::setw(11) << "condition" << std::setw(9) << "status"
     << std::right << std::setw(10) << "acc[%]" << std::setw(10) << "ref[%]" << std::setw(10) << "delta"
     << "  note\n";
  for (const auto& c : cells) {
    std::optional<double> acc, delta;
    if (c.accuracy) acc = *c.accuracy * 100.0;
    if (acc && c.reference) delta = *acc - *c.reference;
    os << std::left << std::setw(16) << c.representation << std::setw(11) << c.condition << std::setw(9) << c.status
       << std::right << std::setw(10) << fmt_pct(acc) << std::setw(10) << fmt_pct(c.reference) << std::setw(10)
       << fmt_pct(delta) << "  " << c.note << "\n";
  }
  return os.str();
}

SuiteOptions default_suite_options(Suite suite, const std::filesystem::path& data_root) {
  SuiteOptions opt;
  opt.data_root = data_root;
  if (suite == Suite::event_table3) {
    opt.base = event_task_defaults();
    opt.representations = {Representation::bit_pulse, Representation::mfcc, Representation::power_spectrum,
                           Representation::raw};
  } else {
    opt.base = music_speech_defaults();
    opt.representations = {Representation::bit_image, Representation::raw, Representation::power_spectrum};
  }
  // frame-level inputs get a small front-end kernel
  for (const char* rep : {"mfcc", "power_spectrum"}) {
    opt.overrides[rep]["kernel_size"] = "1,3";
    opt.overrides[rep]["stride"] = "1,1";
  }
  return opt;
}

SuiteReport run_experiment_suite(Suite suite, const SuiteOptions& options) {
  SuiteReport report;
  report.suite = to_string(suite);
  const auto reps = options.representations.empty() ? default_suite_options(suite, options.data_root).representations
                                                     : options.representations;

  if (suite == Suite::event_table3) {
    const auto manifest_path = options.data_root / "event" / "manifest.csv";
    const bool present = std::filesystem::exists(manifest_path);
    for (Representation rep : reps) {
      SuiteCell cell = make_cell(suite, rep, "clean");
      if (!present) {
        cell.status = "skipped";
        cell.note = "missing " + manifest_path.string();
        report.cells.push_back(cell);
        continue;
      }
      try {
        const TrainResult r = train(cell_config(options, rep), load_manifest(manifest_path));
        cell.status = "ok";
        cell.accuracy = r.metrics.final_test.accuracy;
        cell.note = "best epoch " + std::to_string(r.metrics.best_epoch);
        save_cell(options, cell, &r);
      } catch (const std::exception& e) {
        cell.status = "failed";
        cell.note = e.what();
      }
      report.cells.push_back(cell);
    }
    return report;
  }

  const auto in_domain = options.data_root / "music_speech" / "manifest.csv";
  const auto out_of_domain = options.data_root / "music_speech" / "out_of_domain.csv";
  const bool have_in = std::filesystem::exists(in_domain);
  const bool have_ood = std::filesystem::exists(out_of_domain);
  for (Representation rep : reps) {
    SuiteCell c01 = make_cell(suite, rep, "C01"), c02 = make_cell(suite, rep, "C02"), c03 = make_cell(suite, rep, "C03");
    if (!have_in) {
      for (SuiteCell* c : {&c01, &c02, &c03}) {
        c->status = "skipped";
        c->note = "missing " + in_domain.string();
      }
    } else {
      const RunConfig cfg = cell_config(options, rep);
      try {
        const Manifest manifest = load_manifest(in_domain);
        const TrainResult r = train(cfg, manifest);
        c01.status = "ok";
        c01.accuracy = r.metrics.final_test.accuracy;
        c01.note = "best epoch " + std::to_string(r.metrics.best_epoch);
        save_cell(options, c01, &r);
        try {
          c02.accuracy = evaluate(r.best, manifest, Split::test, audio::SnrSpec{10.0}).accuracy;
          c02.status = "ok";
          c02.note = "C01 model, 10 dB white noise at test";
        } catch (const std::exception& e) {
          c02.status = "failed";
          c02.note = e.what();
        }
      } catch (const std::exception& e) {
        c01.status = c02.status = "failed";
        c01.note = c02.note = e.what();
      }
      if (!have_ood) {
        c03.status = "skipped";
        c03.note = "missing " + out_of_domain.string();
      } else {
        try {
          const Manifest ood = load_manifest(out_of_domain);
          const Manifest manifest = load_manifest(in_domain);
          std::vector<std::string> warnings;
          Dataset train_set = load_split(ood, Split::train, cfg, &warnings);
          Dataset test_set = remap_labels(load_split(manifest, Split::test, cfg, &warnings), train_set.labels);
          const TrainResult r = train(cfg, train_set, test_set);
          c03.status = "ok";
          c03.accuracy = r.metrics.final_test.accuracy;
          c03.note = "trained on user-supplied out-of-domain set";
          save_cell(options, c03, &r);
        } catch (const std::exception& e) {
          c03.status = "failed";
          c03.note = e.what();
        }
      }
    }
    report.cells.push_back(c01);
    report.cells.push_back(c02);
    report.cells.push_back(c03);
  }
  return report;
}

}  // namespace bitwave::train
