#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bitwave/nn.hpp"

namespace bitwave::nn {

struct TensorError {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<TensorError> tensors;
};

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|): the worst deviation
/// measured against the gradient's own scale.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Compares analytic input and parameter gradients of `fragment` with central
/// differences of the scalar probe loss sum(r * fragment(x)) for a fixed random r.
/// Runs in eval mode.
GradCheckReport grad_check(Layer& fragment, const Tensor& input, double eps, double tolerance,
                           std::uint64_t seed, std::string name = "fragment");

GradCheckReport grad_check_softmax_xent(std::span<const double> logits, std::size_t label, double eps,
                                        double tolerance);

/// Forwards to a wrapped layer but inflates every gradient it reports.
class CorruptGradient : public Layer {
 public:
  CorruptGradient(LayerPtr inner, double factor = 1.05) : inner_(std::move(inner)), factor_(factor) {}

  Tensor forward(const Tensor& x, Mode mode) override { return inner_->forward(x, mode); }
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return inner_->output_shape(in); }
  LayerSpec spec() const override { return inner_->spec(); }
  std::vector<Param*> params() override { return inner_->params(); }

 private:
  LayerPtr inner_;
  double factor_;
};

/// Every layer kind the models use, checked at double precision.
/// `corrupt_layer` names a battery entry whose gradient is deliberately broken.
std::vector<GradCheckReport> run_gradient_battery(std::uint64_t seed, const std::string& corrupt_layer = "");

}  // namespace bitwave::nn
