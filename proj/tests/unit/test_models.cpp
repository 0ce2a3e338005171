#include <gtest/gtest.h>

#include <random>

#include "bitwave/error.hpp"
#include "bitwave/models.hpp"

using namespace bitwave;

namespace {

models::CnnLstmConfig small_lstm() {
  models::CnnLstmConfig c;
  c.in_channels = 16;
  c.channels = {4, 6, 8};
  c.hidden_size = 5;
  c.num_classes = 3;
  return c;
}

nn::Tensor bits(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::Tensor t({rows, cols});
  for (double& v : t.values()) v = static_cast<double>(rng() & 1u);
  return t;
}

}  // namespace

TEST(CnnLstm, DefaultGeometry) {
  const auto m = models::build_cnn_lstm(models::CnnLstmConfig{}, 1);
  EXPECT_EQ(m.feature_map_shape({16, 16000}), (nn::Shape{512, 13}));
  EXPECT_EQ(m.recurrent_steps(16000), 13u);
  EXPECT_EQ(m.receptive_field(), 3220u);
  EXPECT_EQ(m.recurrent_steps(3220), 1u);
  EXPECT_THROW(m.recurrent_steps(3219), Error);
  EXPECT_EQ(m.step_width(), 512u);
  const std::string s = m.summary({16, 16000});
  EXPECT_NE(s.find("(128, 1598)"), std::string::npos);
  EXPECT_NE(s.find("(256, 157)"), std::string::npos);
  EXPECT_NE(s.find("(512, 13)"), std::string::npos);
}

TEST(CnnBigru, DefaultGeometry) {
  models::CnnBigruConfig c;
  c.channels = {2, 2, 512};
  c.hidden_size = 4;
  const auto m = models::build_cnn_bigru(c, 1);
  EXPECT_EQ(m.step_width(), 4u * 512u);
  EXPECT_EQ(m.feature_map_shape({80000, 16}), (nn::Shape{512, 232, 4}));
  EXPECT_EQ(m.time_axis(), 0u);
  const std::string s = m.summary({80000, 16});
  EXPECT_NE(s.find("(232, 2048)"), std::string::npos) << s;
}

TEST(CnnLstm, ForwardProducesClassLogits) {
  auto m = models::build_cnn_lstm(small_lstm(), 3);
  const auto y = m.forward(bits(16, 4000, 1), nn::Mode::eval);
  EXPECT_EQ(y.shape(), (nn::Shape{3}));
  EXPECT_TRUE(y.all_finite());
  EXPECT_THROW(m.forward(bits(8, 4000, 1), nn::Mode::eval), Error);
}

TEST(CnnBigru, ForwardProducesClassLogits) {
  models::CnnBigruConfig c;
  c.channels = {2, 3, 4};
  c.hidden_size = 3;
  c.stages = {models::Conv2dStage{4, 5, 2, 1}, models::Conv2dStage{4, 5, 2, 1}, models::Conv2dStage{4, 5, 2, 1}};
  auto m = models::build_cnn_bigru(c, 2);
  const auto y = m.forward(bits(200, 16, 4), nn::Mode::eval);
  EXPECT_EQ(y.shape(), (nn::Shape{2}));
  EXPECT_TRUE(y.all_finite());
}

TEST(Models, SeedDeterminesInitialization) {
  auto a = models::build_cnn_lstm(small_lstm(), 5), b = models::build_cnn_lstm(small_lstm(), 5);
  auto c = models::build_cnn_lstm(small_lstm(), 6);
  const auto x = bits(16, 4000, 9);
  EXPECT_EQ(a.forward(x, nn::Mode::eval), b.forward(x, nn::Mode::eval));
  EXPECT_NE(a.forward(x, nn::Mode::eval), c.forward(x, nn::Mode::eval));
  EXPECT_EQ(models::count_parameters(a), models::count_parameters(c));
}

TEST(Models, PaddingNeverReachesReadout) {
  auto m = models::build_cnn_lstm(small_lstm(), 7);
  const std::vector<nn::Tensor> items{bits(16, 3500, 1), bits(16, 5000, 2), bits(16, 4100, 3)};
  const auto batch = models::pad_batch(items, 1);
  EXPECT_EQ(batch.data.shape(), (nn::Shape{3, 16, 5000}));
  EXPECT_EQ(batch.lengths, (std::vector<std::size_t>{3500, 5000, 4100}));
  const auto logits = models::forward_batch(m, batch, nn::Mode::eval);
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(logits[i], m.forward(items[i], nn::Mode::eval)) << i;
}

TEST(Models, PadBatchTimeAxisZero) {
  const std::vector<nn::Tensor> items{bits(3, 16, 1), bits(5, 16, 2)};
  const auto batch = models::pad_batch(items, 0);
  EXPECT_EQ(batch.data.shape(), (nn::Shape{2, 5, 16}));
  EXPECT_EQ(batch.data[16 * 5 + 3], items[1][3]);
  EXPECT_EQ(batch.data[3 * 16], 0.0);
  const std::vector<nn::Tensor> bad{bits(3, 16, 1), bits(5, 8, 2)};
  EXPECT_THROW(models::pad_batch(bad, 0), Error);
}

TEST(Models, ConfigValidation) {
  auto c = small_lstm();
  c.num_classes = 1;
  EXPECT_THROW(models::build_cnn_lstm(c, 1), Error);
  c = small_lstm();
  c.dropout = 1.0;
  EXPECT_THROW(models::build_cnn_lstm(c, 1), Error);
}
