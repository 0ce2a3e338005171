#include <algorithm>
#include <cmath>

#include "bitwave/error.hpp"
#include "bitwave/nn.hpp"

namespace bitwave::nn {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

LossResult softmax_xent(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size())
    throw Error(ErrorKind::label, "label " + std::to_string(label) + " outside [0, " +
                                      std::to_string(logits.size()) + ")");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double log_z = m + std::log(sum);
  LossResult r;
  r.loss = log_z - logits[label];
  r.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) r.grad[k] = std::exp(logits[k] - log_z);
  r.grad[label] -= 1.0;
  return r;
}

void MomentumSgd::step(std::span<Param* const> params, double learning_rate) {
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const Param* p : params) velocity_.emplace_back(p->value.shape());
  }
  if (velocity_.size() != params.size()) throw Error(ErrorKind::shape, "optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Tensor& v = velocity_[i];
    if (v.shape() != p.value.shape()) throw Error(ErrorKind::shape, "velocity shape mismatch for " + p.name);
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = momentum_ * v[k] - learning_rate * p.grad[k];
      p.value[k] += v[k];
    }
  }
}

LrPolicy parse_lr_policy(const std::string& name) {
  if (name == "constant") return LrPolicy::constant;
  if (name == "halve_every_30") return LrPolicy::halve_every_30;
  throw Error(ErrorKind::config, "unknown lr policy '" + name + "'");
}

const char* to_string(LrPolicy policy) {
  return policy == LrPolicy::constant ? "constant" : "halve_every_30";
}

double lr_schedule(int epoch, double base_lr, LrPolicy policy) {
  if (epoch < 0) throw Error(ErrorKind::config, "epoch must be non-negative");
  if (policy == LrPolicy::constant) return base_lr;
  return base_lr * std::ldexp(1.0, -(epoch / 30));
}

}  // namespace bitwave::nn
