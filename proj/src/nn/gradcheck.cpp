#include "bitwave/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bitwave/error.hpp"

namespace bitwave::nn {
namespace {

double probe_loss(Layer& fragment, const Tensor& x, const Tensor& probe) {
  const Tensor y = fragment.forward(x, Mode::eval);
  if (!y.all_finite()) throw Error(ErrorKind::numerical, "fragment produced a non-finite output");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += probe[i] * y[i];
  return acc;
}

void check_finite(std::span<const double> v, const std::string& what) {
  for (double d : v)
    if (!std::isfinite(d)) throw Error(ErrorKind::numerical, "non-finite gradient in " + what);
}

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw Error(ErrorKind::shape, "gradient length mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

GradCheckReport grad_check(Layer& fragment, const Tensor& input, double eps, double tolerance, std::uint64_t seed,
                           std::string name) {
  GradCheckReport report;
  report.name = std::move(name);
  report.tolerance = tolerance;

  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor probe(fragment.output_shape(input.shape()));
  for (double& v : probe.storage()) v = u(rng);

  auto params = fragment.params();
  zero_grad(params);
  const Tensor y = fragment.forward(input, Mode::eval);
  if (!y.all_finite()) throw Error(ErrorKind::numerical, "fragment produced a non-finite output");
  const Tensor grad_x = fragment.backward(probe);
  check_finite(grad_x.values(), "input");

  // Central differences of the probe loss with respect to each entry of `target`,
  // which is either the input copy or a parameter tensor.
  Tensor x = input;
  auto numeric_of = [&](Tensor& target) {
    std::vector<double> numeric(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double saved = target[i];
      target[i] = saved + eps;
      const double plus = probe_loss(fragment, x, probe);
      target[i] = saved - eps;
      const double minus = probe_loss(fragment, x, probe);
      target[i] = saved;
      numeric[i] = (plus - minus) / (2.0 * eps);
    }
    return numeric;
  };

  report.tensors.push_back({"input", relative_error(grad_x.values(), numeric_of(x))});
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    check_finite(p.grad.values(), p.name);
    const std::vector<double> analytic(p.grad.storage());
    report.tensors.push_back({p.name + "#" + std::to_string(k), relative_error(analytic, numeric_of(p.value))});
  }
  for (const auto& t : report.tensors) report.max_rel_error = std::max(report.max_rel_error, t.max_rel_error);
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

GradCheckReport grad_check_softmax_xent(std::span<const double> logits, std::size_t label, double eps,
                                        double tolerance) {
  GradCheckReport report;
  report.name = "softmax_xent";
  report.tolerance = tolerance;
  const auto analytic = softmax_xent(logits, label).grad;
  std::vector<double> z(logits.begin(), logits.end());
  std::vector<double> numeric(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double saved = z[i];
    z[i] = saved + eps;
    const double plus = softmax_xent(z, label).loss;
    z[i] = saved - eps;
    const double minus = softmax_xent(z, label).loss;
    z[i] = saved;
    numeric[i] = (plus - minus) / (2.0 * eps);
  }
  check_finite(analytic, "softmax_xent");
  report.max_rel_error = relative_error(analytic, numeric);
  report.tensors.push_back({"logits", report.max_rel_error});
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

Tensor CorruptGradient::backward(const Tensor& grad_out) {
  auto ps = inner_->params();
  std::vector<Tensor> before;
  before.reserve(ps.size());
  for (Param* p : ps) before.push_back(p->grad);
  Tensor g = inner_->backward(grad_out);
  for (std::size_t k = 0; k < ps.size(); ++k)
    for (std::size_t i = 0; i < ps[k]->grad.size(); ++i)
      ps[k]->grad[i] = before[k][i] + factor_ * (ps[k]->grad[i] - before[k][i]);
  for (double& v : g.storage()) v *= factor_;
  return g;
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = u(rng);
  return t;
}

}  // namespace

std::vector<GradCheckReport> run_gradient_battery(std::uint64_t seed, const std::string& corrupt_layer) {
  constexpr double kEps = 1e-5;
  constexpr double kLinearTol = 1e-7;
  constexpr double kTol = 1e-4;
  Rng rng(seed);
  std::vector<GradCheckReport> reports;

  auto maybe_corrupt = [&](const std::string& name, LayerPtr layer) -> LayerPtr {
    if (name == corrupt_layer) return std::make_unique<CorruptGradient>(std::move(layer));
    return layer;
  };
  auto check = [&](const std::string& name, LayerPtr layer, const Tensor& x, double tol) {
    LayerPtr l = maybe_corrupt(name, std::move(layer));
    reports.push_back(grad_check(*l, x, kEps, tol, seed ^ std::hash<std::string>{}(name), name));
  };

  check("conv1d", std::make_unique<Conv>(LayerKind::conv1d, 2, 3, std::array<std::size_t, 2>{1, 3},
                                         std::array<std::size_t, 2>{1, 2}, rng),
        random_tensor({2, 7}, rng), kLinearTol);
  check("conv2d", std::make_unique<Conv>(LayerKind::conv2d, 2, 3, std::array<std::size_t, 2>{3, 2},
                                         std::array<std::size_t, 2>{2, 1}, rng),
        random_tensor({2, 7, 5}, rng), kLinearTol);
  check("fc", std::make_unique<Dense>(6, 4, rng), random_tensor({3, 6}, rng), kLinearTol);

  {
    auto stack = std::make_unique<Sequential>();
    stack->emplace<Conv>(LayerKind::conv1d, 2, 4, std::array<std::size_t, 2>{1, 3}, std::array<std::size_t, 2>{1, 2},
                         rng);
    stack->emplace<Relu>();
    stack->emplace<ToSequence>();
    stack->emplace<Dense>(4, 3, rng);
    stack->emplace<Relu>();
    stack->emplace<Dense>(3, 2, rng);
    check("conv_relu_fc", std::move(stack), random_tensor({2, 11}, rng), kTol);
  }
  check("lstm", std::make_unique<Lstm>(3, 4, rng), random_tensor({5, 3}, rng), kTol);
  check("gru", std::make_unique<Gru>(3, 4, false, rng), random_tensor({5, 3}, rng), kTol);
  check("gru_reverse", std::make_unique<Gru>(3, 4, true, rng), random_tensor({5, 3}, rng), kTol);
  check("bigru", std::make_unique<BiGru>(3, 4, rng), random_tensor({5, 3}, rng), kTol);
  {
    auto stack = std::make_unique<Sequential>();
    stack->emplace<BiGru>(3, 4, rng);
    stack->emplace<BidirectionalFinal>();
    stack->emplace<Dense>(8, 2, rng);
    check("bigru_readout", std::move(stack), random_tensor({5, 3}, rng), kTol);
  }
  {
    auto stack = std::make_unique<Sequential>();
    stack->emplace<Conv>(LayerKind::conv1d, 3, 4, std::array<std::size_t, 2>{1, 3}, std::array<std::size_t, 2>{1, 1},
                         rng);
    stack->emplace<Relu>();
    stack->emplace<ToSequence>();
    stack->emplace<Lstm>(4, 3, rng);
    stack->emplace<LastStep>();
    stack->emplace<Dense>(3, 2, rng);
    check("cnn_lstm_stack", std::move(stack), random_tensor({3, 7}, rng), kTol);
  }

  const Tensor logits = random_tensor({5}, rng, -3.0, 3.0);
  reports.push_back(grad_check_softmax_xent(logits.values(), 2, kEps, kTol));
  return reports;
}

}  // namespace bitwave::nn
