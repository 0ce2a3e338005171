#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bitwave/error.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorKind::config, "config key '" + key + "': invalid value '" + value + "' (expected " + expected + ")");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::array<std::size_t, 3> parse_triple(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != 3) bad_value(key, v, "three comma-separated integers");
  std::array<std::size_t, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = parse_uint(key, parts[i]);
  return out;
}

// "1,30" -> {1, 30}
std::array<std::size_t, 2> parse_pair(const std::string& key, const std::string& v, char sep = ',') {
  const auto parts = split(v, sep);
  if (parts.size() != 2) bad_value(key, v, std::string("two integers separated by '") + sep + "'");
  return {parse_uint(key, parts[0]), parse_uint(key, parts[1])};
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const char* to_string(features::Window w) {
  return w == features::Window::hamming ? "hamming" : w == features::Window::hann ? "hann" : "rect";
}

}  // namespace

const char* to_string(Task task) { return task == Task::event ? "event" : "music_speech"; }

const char* to_string(Representation rep) {
  switch (rep) {
    case Representation::bit_pulse: return "bit_pulse";
    case Representation::bit_image: return "bit_image";
    case Representation::raw: return "raw";
    case Representation::power_spectrum: return "power_spectrum";
    case Representation::mfcc: return "mfcc";
  }
  return "?";
}

Representation parse_representation(const std::string& name) {
  for (auto r : {Representation::bit_pulse, Representation::bit_image, Representation::raw,
                 Representation::power_spectrum, Representation::mfcc})
    if (name == to_string(r)) return r;
  throw Error(ErrorKind::config, "unknown representation '" + name + "'");
}

models::Architecture architecture_for(Representation rep) {
  return rep == Representation::bit_image ? models::Architecture::cnn_bigru : models::Architecture::cnn_lstm;
}

features::FrameSpec RunConfig::frame_spec() const {
  features::FrameSpec spec = features::FrameSpec::for_rate(sample_rate);
  if (frame_length) spec.frame_length = frame_length;
  if (hop) spec.hop = hop;
  spec.window = window;
  return spec;
}

RunConfig event_task_defaults() {
  RunConfig cfg;
  cfg.task = Task::event;
  cfg.representation = Representation::bit_pulse;
  cfg.batch_size = 64;
  cfg.epochs = 500;
  cfg.learning_rate = 0.002;
  cfg.lr_policy = nn::LrPolicy::constant;
  cfg.sample_rate = 16000;
  cfg.cnn_lstm.num_classes = 28;
  cfg.cnn_bigru.num_classes = 28;
  return cfg;
}

RunConfig music_speech_defaults() {
  RunConfig cfg;
  cfg.task = Task::music_speech;
  cfg.representation = Representation::bit_image;
  cfg.batch_size = 32;
  cfg.epochs = 300;
  cfg.learning_rate = 0.01;
  cfg.lr_policy = nn::LrPolicy::halve_every_30;
  cfg.sample_rate = 8000;
  cfg.segment_seconds = 10.0;
  cfg.cnn_lstm.num_classes = 2;
  cfg.cnn_bigru.num_classes = 2;
  return cfg;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "task") {
    if (v == "event")
      cfg.task = Task::event;
    else if (v == "music_speech")
      cfg.task = Task::music_speech;
    else
      bad_value(key, v, "event or music_speech");
  } else if (key == "representation") {
    cfg.representation = parse_representation(v);
  } else if (key == "mini_batch_size") {
    cfg.batch_size = parse_uint(key, v);
    if (cfg.batch_size == 0) bad_value(key, v, "a positive integer");
  } else if (key == "num_epochs") {
    const auto e = parse_uint(key, v);
    if (e > 1000000) bad_value(key, v, "at most 1000000");
    cfg.epochs = static_cast<int>(e);
  } else if (key == "optimizer") {
    if (v != "momentum_sgd") bad_value(key, v, "momentum_sgd");
  } else if (key == "loss") {
    if (v != "softmax_cross_entropy") bad_value(key, v, "softmax_cross_entropy");
  } else if (key == "activation") {
    if (v != "relu") bad_value(key, v, "relu");
  } else if (key == "batch_normalization") {
    if (v != "no") bad_value(key, v, "no");
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double(key, v);
    if (cfg.learning_rate <= 0.0) bad_value(key, v, "a positive number");
  } else if (key == "lr_policy") {
    cfg.lr_policy = nn::parse_lr_policy(v);
  } else if (key == "momentum") {
    cfg.momentum = parse_double(key, v);
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) bad_value(key, v, "a value in [0, 1)");
  } else if (key == "dropout") {
    const double d = parse_double(key, v);
    if (d < 0.0 || d >= 1.0) bad_value(key, v, "a rate in [0, 1)");
    cfg.cnn_lstm.dropout = d;
    cfg.cnn_bigru.dropout = d;
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, v);
  } else if (key == "sample_rate") {
    const auto r = parse_uint(key, v);
    if (r == 0 || r > 1000000) bad_value(key, v, "a positive sample rate");
    cfg.sample_rate = static_cast<std::uint32_t>(r);
  } else if (key == "segment_seconds") {
    cfg.segment_seconds = parse_double(key, v);
    if (cfg.segment_seconds < 0.0) bad_value(key, v, "a non-negative duration");
  } else if (key == "crop_seconds") {
    cfg.crop_seconds = parse_double(key, v);
    if (cfg.crop_seconds < 0.0) bad_value(key, v, "a non-negative duration");
  } else if (key == "eval_noise") {
    cfg.eval_noise = v == "clean" ? audio::SnrSpec::clean() : audio::SnrSpec{parse_double(key, v)};
  } else if (key == "bit_mapping") {
    if (v == "unipolar01")
      cfg.bit_mapping = bitrep::BitMapping::unipolar01;
    else if (v == "bipolar")
      cfg.bit_mapping = bitrep::BitMapping::bipolar;
    else
      bad_value(key, v, "unipolar01 or bipolar");
  } else if (key == "raw_normalize") {
    cfg.raw_normalize = parse_bool(key, v);
  } else if (key == "frame_length") {
    cfg.frame_length = parse_uint(key, v);
  } else if (key == "hop") {
    cfg.hop = parse_uint(key, v);
  } else if (key == "window") {
    if (v == "hamming")
      cfg.window = features::Window::hamming;
    else if (v == "hann")
      cfg.window = features::Window::hann;
    else if (v == "rect")
      cfg.window = features::Window::rect;
    else
      bad_value(key, v, "hamming, hann or rect");
  } else if (key == "n_mels") {
    cfg.n_mels = parse_uint(key, v);
  } else if (key == "n_ceps") {
    cfg.n_ceps = parse_uint(key, v);
  } else if (key == "kernel_size") {
    const auto k = parse_pair(key, v);
    if (k[0] != 1 || k[1] == 0) bad_value(key, v, "1,k with k >= 1");
    cfg.cnn_lstm.kernel = k[1];
  } else if (key == "stride") {
    const auto s = parse_pair(key, v);
    if (s[0] != 1 || s[1] == 0) bad_value(key, v, "1,s with s >= 1");
    cfg.cnn_lstm.stride = s[1];
  } else if (key == "channels") {
    cfg.cnn_lstm.channels = parse_triple(key, v);
  } else if (key == "hidden_size") {
    cfg.cnn_lstm.hidden_size = parse_uint(key, v);
  } else if (key == "in_channels") {
    cfg.cnn_lstm.in_channels = parse_uint(key, v);
  } else if (key == "num_classes") {
    cfg.cnn_lstm.num_classes = parse_uint(key, v);
    cfg.cnn_bigru.num_classes = cfg.cnn_lstm.num_classes;
  } else if (key == "bigru_front_width") {
    cfg.cnn_bigru.front_width = parse_uint(key, v);
  } else if (key == "bigru_bit_width") {
    cfg.cnn_bigru.bit_width = parse_uint(key, v);
  } else if (key == "bigru_kernel_sizes" || key == "bigru_strides") {
    const auto parts = split(v, ',');
    if (parts.size() != 3) bad_value(key, v, "three TIMExFREQ pairs");
    for (int i = 0; i < 3; ++i) {
      const auto p = parse_pair(key, parts[i], 'x');
      if (p[0] == 0 || p[1] == 0) bad_value(key, v, "positive extents");
      auto& st = cfg.cnn_bigru.stages[i];
      if (key == "bigru_kernel_sizes") {
        st.kernel_time = p[0];
        st.kernel_freq = p[1];
      } else {
        st.stride_time = p[0];
        st.stride_freq = p[1];
      }
    }
  } else if (key == "bigru_channels") {
    cfg.cnn_bigru.channels = parse_triple(key, v);
  } else if (key == "bigru_hidden_size") {
    cfg.cnn_bigru.hidden_size = parse_uint(key, v);
  } else if (key == "target_test_accuracy") {
    cfg.target_test_accuracy = parse_double(key, v);
  } else if (key == "strict") {
    cfg.strict = parse_bool(key, v);
  } else if (key == "workers") {
    cfg.workers = static_cast<unsigned>(parse_uint(key, v));
  } else {
    throw Error(ErrorKind::config, "unknown config key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  // task lines apply first, resetting to that task's defaults
  std::vector<std::pair<std::string, std::string>> settings;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected key = value");
    settings.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  for (const auto& [k, v] : settings) {
    if (k != "task") continue;
    if (v == "event")
      cfg = event_task_defaults();
    else if (v == "music_speech")
      cfg = music_speech_defaults();
    else
      bad_value(k, v, "event or music_speech");
  }
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  auto triple = [](const std::array<std::size_t, 3>& t) {
    return std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]);
  };
  os << "task = " << to_string(cfg.task) << "\n";
  os << "representation = " << to_string(cfg.representation) << "\n";
  os << "mini_batch_size = " << cfg.batch_size << "\n";
  os << "num_epochs = " << cfg.epochs << "\n";
  os << "optimizer = momentum_sgd\n";
  os << "learning_rate = " << fmt(cfg.learning_rate) << "\n";
  os << "lr_policy = " << nn::to_string(cfg.lr_policy) << "\n";
  os << "momentum = " << fmt(cfg.momentum) << "\n";
  os << "loss = softmax_cross_entropy\n";
  os << "activation = relu\n";
  os << "batch_normalization = no\n";
  os << "dropout = " << fmt(cfg.cnn_lstm.dropout) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "sample_rate = " << cfg.sample_rate << "\n";
  os << "segment_seconds = " << fmt(cfg.segment_seconds) << "\n";
  os << "crop_seconds = " << fmt(cfg.crop_seconds) << "\n";
  os << "eval_noise = " << (cfg.eval_noise.is_clean() ? std::string("clean") : fmt(cfg.eval_noise.snr_db)) << "\n";
  os << "bit_mapping = " << (cfg.bit_mapping == bitrep::BitMapping::bipolar ? "bipolar" : "unipolar01") << "\n";
  os << "raw_normalize = " << (cfg.raw_normalize ? "true" : "false") << "\n";
  os << "frame_length = " << cfg.frame_length << "\n";
  os << "hop = " << cfg.hop << "\n";
  os << "window = " << to_string(cfg.window) << "\n";
  os << "n_mels = " << cfg.n_mels << "\n";
  os << "n_ceps = " << cfg.n_ceps << "\n";
  os << "kernel_size = 1," << cfg.cnn_lstm.kernel << "\n";
  os << "stride = 1," << cfg.cnn_lstm.stride << "\n";
  os << "channels = " << triple(cfg.cnn_lstm.channels) << "\n";
  os << "hidden_size = " << cfg.cnn_lstm.hidden_size << "\n";
  os << "in_channels = " << cfg.cnn_lstm.in_channels << "\n";
  os << "num_classes = " << cfg.cnn_lstm.num_classes << "\n";
  os << "bigru_bit_width = " << cfg.cnn_bigru.bit_width << "\n";
  os << "bigru_front_width = " << cfg.cnn_bigru.front_width << "\n";
  os << "bigru_kernel_sizes = ";
  for (int i = 0; i < 3; ++i)
    os << (i ? "," : "") << cfg.cnn_bigru.stages[i].kernel_time << "x" << cfg.cnn_bigru.stages[i].kernel_freq;
  os << "\nbigru_strides = ";
  for (int i = 0; i < 3; ++i)
    os << (i ? "," : "") << cfg.cnn_bigru.stages[i].stride_time << "x" << cfg.cnn_bigru.stages[i].stride_freq;
  os << "\nbigru_channels = " << triple(cfg.cnn_bigru.channels) << "\n";
  os << "bigru_hidden_size = " << cfg.cnn_bigru.hidden_size << "\n";
  os << "target_test_accuracy = " << fmt(cfg.target_test_accuracy) << "\n";
  os << "strict = " << (cfg.strict ? "true" : "false") << "\n";
  os << "workers = " << cfg.workers << "\n";
  return os.str();
}

}  // namespace bitwave::train
