#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bitwave/error.hpp"
#include "bitwave/seed.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

using nlohmann::json;

std::size_t argmax(const nn::Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

struct PassResult {
  double loss = 0.0;
  EvalResult eval;
};

PassResult eval_pass(models::Model& model, const RunConfig& cfg, const Dataset& data, const audio::SnrSpec& noise) {
  const std::size_t k = data.labels.size();
  PassResult out;
  out.eval.confusion.assign(k, std::vector<std::size_t>(k, 0));
  BatchStream stream(data, cfg, 0, false, noise);
  Batch batch;
  std::size_t correct = 0;
  while (stream.next(batch)) {
    const auto logits = models::forward_batch(model, batch.inputs, nn::Mode::eval);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const std::size_t truth = batch.labels[i];
      const std::size_t pred = argmax(logits[i]);
      if (truth >= k || pred >= k) throw Error(ErrorKind::label, "label index outside the vocabulary");
      out.loss += nn::softmax_xent(logits[i].values(), truth).loss;
      ++out.eval.confusion[truth][pred];
      correct += truth == pred;
      ++out.eval.count;
    }
  }
  if (out.eval.count) {
    out.eval.accuracy = static_cast<double>(correct) / static_cast<double>(out.eval.count);
    out.loss /= static_cast<double>(out.eval.count);
  }
  return out;
}

[[noreturn]] void abort_non_finite(models::Model& model, const nn::Tensor& item, int epoch, std::size_t batch,
                                   const std::string& clip) {
  auto& g = model.graph();
  g.set_finite_checks(true);
  g.forward(item, nn::Mode::eval);
  const int layer = g.first_non_finite_layer();
  g.set_finite_checks(false);
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << ", batch " << batch << " (clip " << clip << "); ";
  if (layer >= 0)
    os << "first non-finite activation in layer " << layer << " (" << g.at(static_cast<std::size_t>(layer)).describe()
       << ")";
  else
    os << "activations finite, loss overflowed";
  throw Error(ErrorKind::numerical, os.str());
}

// Mean batch loss above this multiple of log(classes) counts as divergence.
constexpr double kDivergenceFactor = 1000.0;

[[noreturn]] void abort_diverged(models::Model& model, int epoch, std::size_t batch, double loss, double bound) {
  auto& g = model.graph();
  int worst = -1;
  double worst_norm = -1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double sq = 0.0;
    for (const nn::Param* p : g.at(i).params())
      for (double v : p->grad.values()) sq += v * v;
    if (!g.at(i).params().empty() && !(sq <= worst_norm)) {
      worst_norm = sq;
      worst = static_cast<int>(i);
    }
  }
  std::ostringstream os;
  os << "training diverged at epoch " << epoch << ", batch " << batch << ": mean loss " << loss << " exceeds "
     << bound;
  if (worst >= 0)
    os << "; largest gradient in layer " << worst << " (" << g.at(static_cast<std::size_t>(worst)).describe() << ")";
  throw Error(ErrorKind::numerical, os.str());
}

bool params_finite(models::Model& model) {
  for (const nn::Param* p : model.params())
    if (!p->value.all_finite()) return false;
  return true;
}

void require_split(const Dataset& d, const char* name) {
  if (d.clips.empty()) throw Error(ErrorKind::data, std::string(name) + " split is empty");
}

json eval_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy}, {"count", r.count}, {"confusion", r.confusion}};
}

json record_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"learning_rate", r.learning_rate},
          {"train_loss", r.train_loss},
          {"train_accuracy", r.train_accuracy},
          {"test_accuracy", r.test_accuracy}};
}

}  // namespace

RunConfig resolve_model(const RunConfig& cfg, const Dataset& sample, std::size_t num_classes) {
  require_split(sample, "training");
  RunConfig out = cfg;
  const nn::Tensor x = represent(sample.clips.front().wave, cfg);
  if (architecture_for(cfg.representation) == models::Architecture::cnn_lstm) {
    out.cnn_lstm.in_channels = x.dim(0);
    out.cnn_lstm.num_classes = num_classes;
  } else {
    out.cnn_bigru.bit_width = x.dim(1);
    out.cnn_bigru.num_classes = num_classes;
  }
  return out;
}

models::Model build_model(const RunConfig& resolved) {
  const std::uint64_t s = seed::derive(resolved.seed, "model");
  if (architecture_for(resolved.representation) == models::Architecture::cnn_lstm)
    return models::build_cnn_lstm(resolved.cnn_lstm, s);
  return models::build_cnn_bigru(resolved.cnn_bigru, s);
}

std::string checkpoint_metadata(const RunConfig& resolved, const std::vector<std::string>& labels) {
  std::string out = to_text(resolved);
  for (const auto& l : labels) out += "label = " + l + "\n";
  return out;
}

LoadedModel load_model(const nn::Checkpoint& ckpt) {
  std::istringstream in(ckpt.metadata);
  std::string line, config_text;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    if (line.rfind("label = ", 0) == 0)
      labels.push_back(line.substr(8));
    else
      config_text += line + "\n";
  }
  RunConfig cfg = parse_run_config(config_text);
  if (labels.size() < 2) throw Error(ErrorKind::config, "checkpoint metadata lists fewer than two labels");
  models::Model model = build_model(cfg);
  if (model.num_classes() != labels.size())
    throw Error(ErrorKind::config, "checkpoint label vocabulary does not match the classifier width");
  const auto& g = model.graph();
  bool layers_match = ckpt.layer_specs.size() == g.size();
  for (std::size_t i = 0; layers_match && i < g.size(); ++i) layers_match = ckpt.layer_specs[i] == g.at(i).describe();
  if (!layers_match)
    throw Error(ErrorKind::config, std::string("checkpoint layers do not match the model for representation '") +
                                       to_string(cfg.representation) + "'");
  nn::restore(ckpt, model.graph());
  return {std::move(cfg), std::move(labels), std::move(model)};
}

Dataset remap_labels(Dataset data, const std::vector<std::string>& vocabulary) {
  for (auto& clip : data.clips) {
    const std::string& name = data.labels.at(clip.label);
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), name);
    if (it == vocabulary.end()) throw Error(ErrorKind::data, "label '" + name + "' is not known to the model");
    clip.label = static_cast<std::size_t>(it - vocabulary.begin());
  }
  data.labels = vocabulary;
  return data;
}

EvalResult evaluate(models::Model& model, const RunConfig& cfg, const Dataset& data, const audio::SnrSpec& noise) {
  require_split(data, "evaluation");
  return eval_pass(model, cfg, data, noise).eval;
}

EvalResult evaluate(const nn::Checkpoint& ckpt, const Manifest& manifest, Split split, const audio::SnrSpec& noise,
                    std::vector<std::string>* warnings) {
  LoadedModel lm = load_model(ckpt);
  Dataset data = remap_labels(load_split(manifest, split, lm.config, warnings), lm.labels);
  return evaluate(lm.model, lm.config, data, noise);
}

TrainResult train(const RunConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  require_split(train_set, "training");
  require_split(test_set, "test");
  if (train_set.labels != test_set.labels)
    throw Error(ErrorKind::data, "training and test splits use different label vocabularies");
  if (train_set.labels.size() < 2) throw Error(ErrorKind::data, "training needs at least two labels");
  if (cfg.epochs < 0) throw Error(ErrorKind::config, "epoch count must be non-negative");

  const RunConfig resolved = resolve_model(cfg, train_set, train_set.labels.size());
  models::Model model = build_model(resolved);
  nn::MomentumSgd opt(resolved.momentum);
  const std::string meta = checkpoint_metadata(resolved, train_set.labels);

  TrainResult result;
  Metrics& m = result.metrics;
  m.labels = train_set.labels;

  {
    const PassResult tr = eval_pass(model, resolved, train_set, audio::SnrSpec::clean());
    m.initial.epoch = -1;
    m.initial.learning_rate = nn::lr_schedule(0, resolved.learning_rate, resolved.lr_policy);
    m.initial.train_loss = tr.loss;
    m.initial.train_accuracy = tr.eval.accuracy;
    m.initial.test_accuracy = eval_pass(model, resolved, test_set, audio::SnrSpec::clean()).eval.accuracy;
  }
  m.best_epoch = -1;
  m.best_test_accuracy = m.initial.test_accuracy;
  result.best = nn::snapshot(model.graph(), meta);
  if (on_epoch) on_epoch(m.initial);

  const auto params = model.params();
  const double divergence_bound = kDivergenceFactor * std::log(static_cast<double>(train_set.labels.size()));
  for (int epoch = 0; epoch < resolved.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = nn::lr_schedule(epoch, resolved.learning_rate, resolved.lr_policy);
    BatchStream stream(train_set, resolved, seed::derive(resolved.seed, "epoch" + std::to_string(epoch)));
    Batch batch;
    std::size_t batch_no = 0, seen = 0;
    double loss_sum = 0.0;
    while (stream.next(batch)) {
      nn::zero_grad(params);
      const std::size_t n = batch.labels.size();
      const std::size_t axis = model.time_axis();
      const auto& shape = batch.inputs.data.shape();
      const std::size_t padded = shape[1 + axis], other = shape[2 - axis], stride = shape[1] * shape[2];
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        // Crop to the true length; padding never reaches the readout.
        const std::size_t len = batch.inputs.lengths[b];
        const double* src = batch.inputs.data.data() + b * stride;
        nn::Tensor item;
        if (axis == 0) {
          item = nn::Tensor({len, other}, std::vector<double>(src, src + len * other));
        } else {
          item = nn::Tensor({other, len});
          for (std::size_t c = 0; c < other; ++c) std::copy_n(src + c * padded, len, item.data() + c * len);
        }
        const nn::Tensor logits = model.forward(item, nn::Mode::train);
        nn::LossResult lr = nn::softmax_xent(logits.values(), batch.labels[b]);
        if (!std::isfinite(lr.loss))
          abort_non_finite(model, item, epoch, batch_no, train_set.clips[batch.indices[b]].id);
        batch_loss += lr.loss;
        for (double& g : lr.grad) g /= static_cast<double>(n);
        const std::size_t k = lr.grad.size();
        model.backward(nn::Tensor({k}, std::move(lr.grad)));
      }
      loss_sum += batch_loss;
      if (batch_loss / static_cast<double>(n) > divergence_bound)
        abort_diverged(model, epoch, batch_no, batch_loss / static_cast<double>(n), divergence_bound);
      opt.step(params, rec.learning_rate);
      if (!params_finite(model)) {
        std::ostringstream os;
        os << "non-finite parameters after the update at epoch " << epoch << ", batch " << batch_no;
        throw Error(ErrorKind::numerical, os.str());
      }
      seen += n;
      ++batch_no;
    }
    rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1));
    rec.train_accuracy = eval_pass(model, resolved, train_set, audio::SnrSpec::clean()).eval.accuracy;
    rec.test_accuracy = eval_pass(model, resolved, test_set, audio::SnrSpec::clean()).eval.accuracy;
    m.epochs.push_back(rec);
    if (rec.test_accuracy > m.best_test_accuracy) {
      m.best_test_accuracy = rec.test_accuracy;
      m.best_epoch = epoch;
      result.best = nn::snapshot(model.graph(), meta);
    }
    if (on_epoch) on_epoch(rec);
    if (resolved.target_test_accuracy > 0.0 && rec.test_accuracy >= resolved.target_test_accuracy) break;
  }

  result.last = nn::snapshot(model.graph(), meta, &opt);
  nn::restore(result.best, model.graph());
  m.final_test = eval_pass(model, resolved, test_set, audio::SnrSpec::clean()).eval;
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

TrainResult train(const RunConfig& cfg, const Manifest& manifest, const EpochCallback& on_epoch) {
  std::vector<std::string> warnings;
  const Dataset train_set = load_split(manifest, Split::train, cfg, &warnings);
  const Dataset test_set = load_split(manifest, Split::test, cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return train(cfg, train_set, test_set, on_epoch);
}

std::string epoch_json(const EpochRecord& r) { return record_json(r).dump(); }

std::string metrics_json(const Metrics& m) {
  json epochs = json::array();
  for (const auto& r : m.epochs) epochs.push_back(record_json(r));
  json doc = {{"labels", m.labels},
              {"initial", record_json(m.initial)},
              {"epochs", epochs},
              {"selection", "best_test_accuracy"},
              {"best_epoch", m.best_epoch},
              {"best_test_accuracy", m.best_test_accuracy},
              {"final_test", eval_json(m.final_test)}};
  return doc.dump(2) + "\n";
}

}  // namespace bitwave::train
