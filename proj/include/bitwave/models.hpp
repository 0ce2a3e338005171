#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitwave/nn.hpp"

namespace bitwave::models {

/// Three 1-D conv stages over (channels, time), an LSTM over the per-step
/// feature vectors, and an FC classifier reading the final step.
struct CnnLstmConfig {
  std::size_t in_channels = 16;
  std::size_t kernel = 30;
  std::size_t stride = 10;
  std::array<std::size_t, 3> channels{128, 256, 512};
  std::size_t hidden_size = 512;
  std::size_t num_classes = 28;
  double dropout = 0.2;

  bool operator==(const CnnLstmConfig&) const = default;
};

struct Conv2dStage {
  std::size_t kernel_time = 14;
  std::size_t kernel_freq = 5;
  std::size_t stride_time = 7;
  std::size_t stride_freq = 1;

  bool operator==(const Conv2dStage&) const = default;
};

/// Per-sample FC over the bit axis, three 2-D conv stages over (time, width),
/// a BiGRU over time, and an FC classifier on the joined final states.
/// With 16 front units and (14x5, stride 7x1) stages the frequency extent is
/// 16 -> 12 -> 8 -> 4, so each BiGRU step sees 4 x 512 = 2048 values.
struct CnnBigruConfig {
  std::size_t bit_width = 16;
  std::size_t front_width = 16;
  std::array<Conv2dStage, 3> stages{};
  std::array<std::size_t, 3> channels{128, 256, 512};
  std::size_t hidden_size = 512;
  std::size_t num_classes = 2;
  double dropout = 0.2;

  bool operator==(const CnnBigruConfig&) const = default;
};

enum class Architecture { cnn_lstm, cnn_bigru };

const char* to_string(Architecture arch);

/// Classifier graph plus the metadata needed to reason about its time axis.
class Model {
 public:
  Model(Architecture arch, nn::Sequential graph, CnnLstmConfig lstm, CnnBigruConfig bigru);

  Architecture architecture() const noexcept { return arch_; }
  const CnnLstmConfig& lstm_config() const noexcept { return lstm_; }
  const CnnBigruConfig& bigru_config() const noexcept { return bigru_; }
  std::size_t num_classes() const noexcept;

  /// Input (C, L) for CNN-LSTM, (T, B) for CNN-BiGRU. Returns logits (num_classes).
  nn::Tensor forward(const nn::Tensor& input, nn::Mode mode);
  nn::Tensor backward(const nn::Tensor& grad_logits);

  std::vector<nn::Param*> params() { return graph_.params(); }
  nn::Sequential& graph() noexcept { return graph_; }

  /// Axis of the input that carries time.
  std::size_t time_axis() const noexcept { return arch_ == Architecture::cnn_lstm ? 1 : 0; }
  /// Shape of the last convolution's output for a given input shape.
  nn::Shape feature_map_shape(const nn::Shape& input) const;
  /// Number of recurrent steps for an input of `length` time samples.
  std::size_t recurrent_steps(std::size_t length) const;
  /// Width of each recurrent step's input vector.
  std::size_t step_width() const;
  /// Smallest input length that yields one recurrent step.
  std::size_t receptive_field() const;

  std::string summary(const nn::Shape& input) const;

 private:
  Architecture arch_;
  nn::Sequential graph_;
  CnnLstmConfig lstm_;
  CnnBigruConfig bigru_;
};

Model build_cnn_lstm(const CnnLstmConfig& cfg, std::uint64_t seed);
Model build_cnn_bigru(const CnnBigruConfig& cfg, std::uint64_t seed);

std::size_t count_parameters(Model& model);

/// Time-padded batch. Items are zero-padded along the model's time axis to the
/// longest item; `lengths` records each item's true extent.
struct PaddedBatch {
  nn::Tensor data;  // (batch, ...item shape with padded time axis)
  std::vector<std::size_t> lengths;
};

PaddedBatch pad_batch(std::span<const nn::Tensor> items, std::size_t time_axis);

/// Logits per item. Each item is cropped to its true length before the
/// forward pass, so padding never reaches the readout.
std::vector<nn::Tensor> forward_batch(Model& model, const PaddedBatch& batch, nn::Mode mode);

}  // namespace bitwave::models
