#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bitwave/tensor.hpp"

namespace bitwave::nn {

enum class Mode { train, eval };

/// A trainable tensor and its accumulated gradient.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

enum class LayerKind {
  conv1d,
  conv2d,
  relu,
  dropout,
  fc,
  lstm,
  gru,
  bigru,
  to_sequence,
  last_step,
  bidir_final,
  add_channel,
};

const char* to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::array<std::size_t, 2> kernel{1, 1};
  std::array<std::size_t, 2> stride{1, 1};
  std::size_t in_channels = 0;   // conv channels, fc/rnn input width
  std::size_t out_channels = 0;  // conv channels, fc output width
  double rate = 0.0;             // dropout
  std::size_t hidden_size = 0;   // rnn
  bool reverse = false;          // gru direction
};

/// Valid-convolution output extent: floor((in - k) / s) + 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride);

using Rng = std::mt19937_64;

/// Layers process one example at a time and cache what backward needs.
/// backward() accumulates parameter gradients and returns the input gradient.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual LayerSpec spec() const = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual std::string describe() const;
};

using LayerPtr = std::unique_ptr<Layer>;

/// Cross-correlation without padding. Rank-2 input (C, L) for conv1d with a
/// (1, k) kernel, rank-3 input (C, H, W) for conv2d.
class Conv : public Layer {
 public:
  Conv(LayerKind kind, std::size_t in_channels, std::size_t out_channels,
       std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  struct Geometry {
    std::size_t h, w, out_h, out_w;
  };
  Geometry geometry(const Shape& in) const;
  void im2col(const Tensor& x, const Geometry& g, std::size_t col0, std::size_t ncols, double* cols) const;

  LayerKind kind_;
  std::size_t in_channels_, out_channels_;
  std::array<std::size_t, 2> kernel_, stride_;
  Param weight_;  // (out, in * kh * kw)
  Param bias_;    // (out)
  Tensor input_;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  LayerSpec spec() const override { return {.kind = LayerKind::relu}; }

 private:
  Tensor input_;
};

/// Inverted dropout: train mode zeroes with probability `rate` and scales
/// survivors by 1/(1-rate); eval mode is the identity.
class Dropout : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  LayerSpec spec() const override { return {.kind = LayerKind::dropout, .rate = rate_}; }
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<double> mask_;  // empty after an eval-mode forward
};

/// Affine map over the last axis: (..., in) -> (..., out).
class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Param weight_;  // (out, in)
  Param bias_;
  Tensor input_;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

/// LSTM over a (steps, input) sequence, emitting every hidden state (steps, hidden).
/// Gate rows are ordered input, forget, candidate, output.
class Lstm : public Layer {
 public:
  Lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override;
  std::vector<Param*> params() override { return {&w_ih_, &w_hh_, &bias_}; }

  /// A single cell update from an explicit state.
  LstmState step(std::span<const double> x, const LstmState& state) const;

  Param& w_ih() { return w_ih_; }
  Param& w_hh() { return w_hh_; }
  Param& bias() { return bias_; }
  std::size_t hidden_size() const noexcept { return hidden_; }

 private:
  std::size_t input_, hidden_;
  Param w_ih_;  // (4H, I)
  Param w_hh_;  // (4H, H)
  Param bias_;  // (4H)
  Tensor input_cache_;
  std::vector<double> gates_, cells_, tanh_cells_, hiddens_;
};

/// GRU with h' = (1 - z) h + z n, n = tanh(W_n x + U_n (r * h) + b_n).
/// Gate rows are ordered update, reset, candidate. A reverse GRU consumes the
/// sequence back to front; its output row t is the state after step t.
class Gru : public Layer {
 public:
  Gru(std::size_t input_size, std::size_t hidden_size, bool reverse, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override;
  std::vector<Param*> params() override { return {&w_ih_, &w_hh_, &bias_}; }

  std::vector<double> step(std::span<const double> x, std::span<const double> h) const;

  Param& w_ih() { return w_ih_; }
  Param& w_hh() { return w_hh_; }
  Param& bias() { return bias_; }
  std::size_t hidden_size() const noexcept { return hidden_; }

 private:
  std::size_t index(std::size_t t, std::size_t steps) const { return reverse_ ? steps - 1 - t : t; }

  std::size_t input_, hidden_;
  bool reverse_;
  Param w_ih_;  // (3H, I)
  Param w_hh_;  // (3H, H)
  Param bias_;  // (3H)
  Tensor input_cache_;
  // Per processing step: z, r, n, h_prev, r*h_prev.
  std::vector<double> z_, r_, n_, hprev_, rh_;
};

/// Forward and reverse GRUs; output row t = [h_fwd(t), h_bwd(t)].
class BiGru : public Layer {
 public:
  BiGru(std::size_t input_size, std::size_t hidden_size, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override;
  std::vector<Param*> params() override;

  Gru& forward_gru() { return fwd_; }
  Gru& backward_gru() { return bwd_; }

 private:
  std::size_t hidden_;
  Gru fwd_, bwd_;
};

/// (C, N) -> (N, C) and (C, T, F) -> (T, C*F) with index c*F + f.
class ToSequence : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override { return {.kind = LayerKind::to_sequence}; }

 private:
  Shape in_shape_;
};

/// (N, H) -> (H): the state after the final step.
class LastStep : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override { return {.kind = LayerKind::last_step}; }

 private:
  Shape in_shape_;
};

/// (N, 2H) -> (2H): final forward state (row N-1) joined with the final
/// backward state (row 0).
class BidirectionalFinal : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override { return {.kind = LayerKind::bidir_final}; }

 private:
  Shape in_shape_;
};

/// (H, W) -> (1, H, W).
class AddChannel : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override { return {.kind = LayerKind::add_channel}; }

 private:
  Shape in_shape_;
};

/// Layer chain. Owns its layers.
class Sequential : public Layer {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  Layer& add(LayerPtr layer);
  template <class L, class... Args>
  L& emplace(Args&&... args) {
    return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
  }

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  LayerSpec spec() const override { return {}; }
  std::vector<Param*> params() override;
  std::string describe() const override;

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }
  const Layer& at(std::size_t i) const { return *layers_.at(i); }

  /// Layer index whose last forward produced a non-finite value; -1 if none.
  int first_non_finite_layer() const noexcept { return non_finite_layer_; }
  void set_finite_checks(bool on) noexcept { check_finite_ = on; }

 private:
  std::vector<LayerPtr> layers_;
  bool check_finite_ = false;
  int non_finite_layer_ = -1;
};

void zero_grad(std::span<Param* const> params);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

/// -log softmax(logits)[label] with max subtraction; grad = softmax - onehot.
LossResult softmax_xent(std::span<const double> logits, std::size_t label);

std::vector<double> softmax(std::span<const double> logits);

/// Classical momentum: v <- mu v - lr g; w <- w + v.
class MomentumSgd {
 public:
  explicit MomentumSgd(double momentum = 0.9) : momentum_(momentum) {}

  void step(std::span<Param* const> params, double learning_rate);

  double momentum() const noexcept { return momentum_; }
  std::vector<Tensor>& velocity() noexcept { return velocity_; }
  const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

 private:
  double momentum_;
  std::vector<Tensor> velocity_;
};

enum class LrPolicy { constant, halve_every_30 };

LrPolicy parse_lr_policy(const std::string& name);
const char* to_string(LrPolicy policy);

double lr_schedule(int epoch, double base_lr, LrPolicy policy);

}  // namespace bitwave::nn
