#include "bitwave/models.hpp"

#include <algorithm>
#include <sstream>

#include "bitwave/error.hpp"
#include "bitwave/seed.hpp"

namespace bitwave::models {

const char* to_string(Architecture arch) { return arch == Architecture::cnn_lstm ? "cnn_lstm" : "cnn_bigru"; }

Model::Model(Architecture arch, nn::Sequential graph, CnnLstmConfig lstm, CnnBigruConfig bigru)
    : arch_(arch), graph_(std::move(graph)), lstm_(lstm), bigru_(bigru) {}

std::size_t Model::num_classes() const noexcept {
  return arch_ == Architecture::cnn_lstm ? lstm_.num_classes : bigru_.num_classes;
}

nn::Tensor Model::forward(const nn::Tensor& input, nn::Mode mode) { return graph_.forward(input, mode); }

nn::Tensor Model::backward(const nn::Tensor& grad_logits) { return graph_.backward(grad_logits); }

nn::Shape Model::feature_map_shape(const nn::Shape& input) const {
  if (input.size() != 2) throw Error(ErrorKind::shape, "model input must be rank 2, got " + nn::to_string(input));
  if (arch_ == Architecture::cnn_lstm) {
    if (input[0] != lstm_.in_channels)
      throw Error(ErrorKind::shape, "model expects " + std::to_string(lstm_.in_channels) + " input channels, got " +
                                        std::to_string(input[0]));
    std::size_t length = input[1];
    for (int i = 0; i < 3; ++i) length = nn::conv_output_extent(length, lstm_.kernel, lstm_.stride);
    return {lstm_.channels[2], length};
  }
  if (input[1] != bigru_.bit_width)
    throw Error(ErrorKind::shape, "model expects " + std::to_string(bigru_.bit_width) + " columns, got " +
                                      std::to_string(input[1]));
  std::size_t time = input[0], freq = bigru_.front_width;
  for (const auto& st : bigru_.stages) {
    time = nn::conv_output_extent(time, st.kernel_time, st.stride_time);
    freq = nn::conv_output_extent(freq, st.kernel_freq, st.stride_freq);
  }
  return {bigru_.channels[2], time, freq};
}

std::size_t Model::recurrent_steps(std::size_t length) const {
  const nn::Shape in = arch_ == Architecture::cnn_lstm ? nn::Shape{lstm_.in_channels, length}
                                                       : nn::Shape{length, bigru_.bit_width};
  return feature_map_shape(in)[1];
}

std::size_t Model::step_width() const {
  if (arch_ == Architecture::cnn_lstm) return lstm_.channels[2];
  std::size_t freq = bigru_.front_width;
  for (const auto& st : bigru_.stages) freq = nn::conv_output_extent(freq, st.kernel_freq, st.stride_freq);
  return freq * bigru_.channels[2];
}

std::size_t Model::receptive_field() const {
  std::size_t r = 1;
  if (arch_ == Architecture::cnn_lstm) {
    for (int i = 0; i < 3; ++i) r = (r - 1) * lstm_.stride + lstm_.kernel;
  } else {
    for (auto it = bigru_.stages.rbegin(); it != bigru_.stages.rend(); ++it)
      r = (r - 1) * it->stride_time + it->kernel_time;
  }
  return r;
}

std::string Model::summary(const nn::Shape& input) const {
  std::ostringstream os;
  os << to_string(arch_) << " input " << nn::to_string(input) << "\n";
  nn::Shape s = input;
  for (std::size_t i = 0; i < graph_.size(); ++i) {
    s = graph_.at(i).output_shape(s);
    os << "  [" << i << "] " << graph_.at(i).describe() << " -> " << nn::to_string(s) << "\n";
  }
  os << "  recurrent steps: " << feature_map_shape(input)[1] << ", step width: " << step_width() << "\n";
  return os.str();
}

namespace {

void check_dropout(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::config, "dropout rate must lie in [0, 1)");
}

}  // namespace

Model build_cnn_lstm(const CnnLstmConfig& cfg, std::uint64_t seed) {
  if (cfg.in_channels == 0 || cfg.num_classes < 2 || cfg.hidden_size == 0)
    throw Error(ErrorKind::config, "cnn_lstm needs input channels, a hidden size and at least two classes");
  check_dropout(cfg.dropout);
  nn::Rng rng(seed::derive(seed, "cnn_lstm/init"));
  nn::Sequential g;
  std::size_t in = cfg.in_channels;
  for (int i = 0; i < 3; ++i) {
    g.emplace<nn::Conv>(nn::LayerKind::conv1d, in, cfg.channels[i], std::array<std::size_t, 2>{1, cfg.kernel},
                        std::array<std::size_t, 2>{1, cfg.stride}, rng);
    g.emplace<nn::Relu>();
    g.emplace<nn::Dropout>(cfg.dropout, seed::derive(seed, "dropout" + std::to_string(i)));
    in = cfg.channels[i];
  }
  g.emplace<nn::ToSequence>();
  g.emplace<nn::Lstm>(cfg.channels[2], cfg.hidden_size, rng);
  g.emplace<nn::LastStep>();
  g.emplace<nn::Dense>(cfg.hidden_size, cfg.num_classes, rng);
  return Model(Architecture::cnn_lstm, std::move(g), cfg, CnnBigruConfig{});
}

Model build_cnn_bigru(const CnnBigruConfig& cfg, std::uint64_t seed) {
  if (cfg.bit_width == 0 || cfg.front_width == 0 || cfg.num_classes < 2 || cfg.hidden_size == 0)
    throw Error(ErrorKind::config, "cnn_bigru needs positive widths and at least two classes");
  check_dropout(cfg.dropout);
  nn::Rng rng(seed::derive(seed, "cnn_bigru/init"));
  nn::Sequential g;
  g.emplace<nn::Dense>(cfg.bit_width, cfg.front_width, rng);
  g.emplace<nn::Relu>();
  g.emplace<nn::AddChannel>();
  std::size_t in = 1, freq = cfg.front_width;
  for (int i = 0; i < 3; ++i) {
    const auto& st = cfg.stages[i];
    g.emplace<nn::Conv>(nn::LayerKind::conv2d, in, cfg.channels[i],
                        std::array<std::size_t, 2>{st.kernel_time, st.kernel_freq},
                        std::array<std::size_t, 2>{st.stride_time, st.stride_freq}, rng);
    g.emplace<nn::Relu>();
    g.emplace<nn::Dropout>(cfg.dropout, seed::derive(seed, "dropout" + std::to_string(i)));
    in = cfg.channels[i];
    freq = nn::conv_output_extent(freq, st.kernel_freq, st.stride_freq);
  }
  g.emplace<nn::ToSequence>();
  g.emplace<nn::BiGru>(freq * cfg.channels[2], cfg.hidden_size, rng);
  g.emplace<nn::BidirectionalFinal>();
  g.emplace<nn::Dense>(2 * cfg.hidden_size, cfg.num_classes, rng);
  return Model(Architecture::cnn_bigru, std::move(g), CnnLstmConfig{}, cfg);
}

std::size_t count_parameters(Model& model) {
  std::size_t n = 0;
  for (const nn::Param* p : model.params()) n += p->value.size();
  return n;
}

PaddedBatch pad_batch(std::span<const nn::Tensor> items, std::size_t time_axis) {
  if (items.empty()) throw Error(ErrorKind::shape, "cannot pad an empty batch");
  if (time_axis > 1) throw Error(ErrorKind::shape, "time axis must be 0 or 1");
  const std::size_t other_axis = 1 - time_axis;
  const std::size_t other = items[0].rank() == 2 ? items[0].dim(other_axis) : 0;
  std::size_t longest = 0;
  for (const auto& item : items) {
    if (item.rank() != 2 || item.dim(other_axis) != other)
      throw Error(ErrorKind::shape, "batch items must be rank 2 and agree off the time axis");
    longest = std::max(longest, item.dim(time_axis));
  }
  PaddedBatch batch;
  nn::Shape item_shape(2);
  item_shape[time_axis] = longest;
  item_shape[other_axis] = other;
  batch.data = nn::Tensor({items.size(), item_shape[0], item_shape[1]});
  const std::size_t stride = item_shape[0] * item_shape[1];
  for (std::size_t b = 0; b < items.size(); ++b) {
    const auto& item = items[b];
    const std::size_t len = item.dim(time_axis);
    batch.lengths.push_back(len);
    double* dst = batch.data.data() + b * stride;
    if (time_axis == 0) {
      std::copy(item.storage().begin(), item.storage().end(), dst);
    } else {
      for (std::size_t c = 0; c < other; ++c) std::copy_n(item.data() + c * len, len, dst + c * longest);
    }
  }
  return batch;
}

std::vector<nn::Tensor> forward_batch(Model& model, const PaddedBatch& batch, nn::Mode mode) {
  const auto& shape = batch.data.shape();
  if (shape.size() != 3 || shape[0] != batch.lengths.size())
    throw Error(ErrorKind::shape, "padded batch has inconsistent shape");
  const std::size_t axis = model.time_axis();
  const std::size_t padded = shape[1 + axis];
  const std::size_t other = shape[2 - axis];
  const std::size_t stride = shape[1] * shape[2];
  std::vector<nn::Tensor> logits;
  logits.reserve(batch.lengths.size());
  for (std::size_t b = 0; b < batch.lengths.size(); ++b) {
    const std::size_t len = batch.lengths[b];
    if (len > padded) throw Error(ErrorKind::shape, "item length exceeds padded extent");
    const double* src = batch.data.data() + b * stride;
    nn::Tensor item;
    if (axis == 0) {
      item = nn::Tensor({len, other}, std::vector<double>(src, src + len * other));
    } else {
      item = nn::Tensor({other, len});
      for (std::size_t c = 0; c < other; ++c) std::copy_n(src + c * padded, len, item.data() + c * len);
    }
    logits.push_back(model.forward(item, mode));
  }
  return logits;
}

}  // namespace bitwave::models
