#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "bitwave/audio.hpp"
#include "bitwave/cli.hpp"
#include "bitwave/container.hpp"
#include "bitwave/train.hpp"

using namespace bitwave;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bitwave_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kTiny{"-s", "sample_rate=8000", "-s", "channels=4,4,4", "-s", "hidden_size=4",
                                     "-s", "mini_batch_size=8", "-s", "learning_rate=0.01"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.begin() + 1, kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST(Cli, TransformTenSecondClip) {
  const auto dir = temp_dir("transform");
  audio::Waveform w{{}, 8000, 16};
  for (int i = 0; i < 80000; ++i) w.samples.push_back(static_cast<std::int32_t>(9000 * std::sin(0.01 * i)));
  audio::save_wav(w, dir / "in.wav");
  auto r = run({"transform", (dir / "in.wav").string(), "-k", "bit-image", "-o", (dir / "img.bwr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(80000, 16)"), std::string::npos) << r.out;
  r = run({"transform", (dir / "in.wav").string(), "-k", "bit-pulse", "-o", (dir / "pulse.bwr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(16, 80000)"), std::string::npos) << r.out;
  r = run({"transform", (dir / "pulse.bwr").string(), "-k", "wav", "-o", (dir / "back.wav").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(audio::load_wav(dir / "back.wav"), w);
  r = run({"inspect", (dir / "img.bwr").string()});
  EXPECT_NE(r.out.find("bit-image (80000, 16)"), std::string::npos) << r.out;
}

TEST(Cli, FeaturesCsv) {
  const auto dir = temp_dir("features");
  audio::Waveform w{std::vector<std::int32_t>(8000, 0), 8000, 16};
  for (int i = 0; i < 8000; ++i) w.samples[i] = static_cast<std::int32_t>(5000 * std::sin(0.3 * i));
  audio::save_wav(w, dir / "in.wav");
  const auto r = run({"features", (dir / "in.wav").string(), "-k", "mfcc", "-o", (dir / "m.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(", 39)"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "m.csv"));
}

TEST(Cli, ErrorsMapToExitCodes) {
  auto r = run({"transform", "/no/such/file.wav", "-k", "bit-pulse", "-o", "/tmp/x.bwr"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/no/such/file.wav"), std::string::npos) << r.err;
  EXPECT_EQ(run({"transform", "--bogus-flag"}).code, 2);
  EXPECT_EQ(run({"train", "--print-config", "-s", "no_such_key=1"}).code, 2);
  EXPECT_EQ(run({"train", "-d", "/no/such/manifest.csv"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, PrintedConfigReproducesItself) {
  const auto dir = temp_dir("config");
  const auto first = run({"train", "--print-config", "-s", "task=music_speech", "-s", "learning_rate=0.05",
                          "-s", "eval_noise=10", "--seed", "77"});
  ASSERT_EQ(first.code, 0) << first.err;
  std::ofstream(dir / "cfg.txt") << first.out;
  const auto second = run({"train", "--print-config", "-c", (dir / "cfg.txt").string()});
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(train::parse_run_config(second.out).seed, 77u);
}

TEST(Cli, MusicSpeechConfigEcho) {
  const auto r = run({"train", "--print-config", "-s", "task=music_speech"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("num_epochs = 300\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mini_batch_size = 32\n"), std::string::npos) << r.out;
}

TEST(Cli, TrainWritesOutputsAndEvalReproduces) {
  const auto dir = temp_dir("train");
  train::write_synthetic({12, 8, 0.5, 8000, 4}, dir / "data");
  const auto manifest = (dir / "data" / "manifest.csv").string();
  auto r = run(with_tiny({"train", "-d", manifest, "-o", (dir / "out").string(), "-s", "num_epochs=2"}));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.jsonl", "metrics.json", "config.txt", "timing.json", "best.ckpt", "last.ckpt"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
  EXPECT_EQ(slurp(dir / "out" / "metrics.jsonl").find("wall"), std::string::npos);
  r = run({"eval", (dir / "out" / "best.ckpt").string(), "-d", manifest, "-o", (dir / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "eval" / "eval.json"));
  r = run({"inspect", (dir / "out" / "best.ckpt").string()});
  EXPECT_NE(r.out.find("checkpoint"), std::string::npos);
}

TEST(Cli, DivergentLearningRateExitsNumerical) {
  const auto dir = temp_dir("diverge");
  train::write_synthetic({12, 8, 0.5, 8000, 4}, dir / "data");
  const auto r = run(with_tiny({"train", "-d", (dir / "data" / "manifest.csv").string(), "-o",
                                (dir / "out").string(), "-s", "num_epochs=2", "-s", "learning_rate=1e6"}));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("epoch"), std::string::npos) << r.err;
}

TEST(Cli, EmptySuiteRootIsSkippedNotFailed) {
  const auto dir = temp_dir("suite");
  const auto r = run({"suite", "event_table3", "-r", (dir / "none").string(), "-o", (dir / "out").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("skipped"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
}

TEST(Cli, InspectModelShapes) {
  const auto r = run({"inspect", "--model", "cnn_lstm", "--length", "16000"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(512, 13)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("receptive field: 3220"), std::string::npos) << r.out;
}

TEST(Cli, GradcheckPassesAndCatchesCorruption) {
  auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  r = run({"gradcheck", "--corrupt", "conv1d"});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--corrupt", "nonexistent"}).code, 2);
}
