// SPDX-License-Identifier: Apache-2.0
#include "deepmood/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "deepmood/errors.hpp"

namespace deepmood {

int dichotomize_hdrs(int score) {
  if (score < 0) throw DataError("HDRS score must be >= 0, got " + std::to_string(score));
  return score >= kHdrsPositiveThreshold ? 1 : 0;
}

SplitIndices temporal_split(std::span<const SessionKey> sessions, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ConfigError("temporal_split: ratio must be in [0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < sessions.size(); ++i) by_user[sessions[i].user_id].push_back(i);

  SplitIndices split;
  for (auto& [user, idx] : by_user) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(sessions[a].start_ms, sessions[a].end_ms, a) <
             std::tie(sessions[b].start_ms, sessions[b].end_ms, b);
    });
    const std::size_t n = idx.size();
    std::size_t n_train = n;
    if (n < 2) {
      ++split.users_without_val;
    } else {
      // The small epsilon absorbs representation error, e.g. 0.8 * 5.
      n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    }
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  return split;
}

std::vector<SequenceBatch> Dataset::batches(std::span<const std::size_t> indices) const {
  std::vector<SequenceBatch> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back(SequenceBatch::from_sequences(v, indices));
  return out;
}

Targets Dataset::targets_for(std::span<const std::size_t> indices) const {
  Targets t;
  t.labels.reserve(indices.size());
  t.values.reserve(indices.size());
  for (std::size_t i : indices) {
    t.labels.push_back(labels[i]);
    t.values.push_back(targets[i]);
  }
  return t;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.view_names = view_names;
  out.views.resize(views.size());
  for (std::size_t i : indices) {
    for (std::size_t v = 0; v < views.size(); ++v) out.views[v].push_back(views[v][i]);
    out.labels.push_back(labels[i]);
    out.targets.push_back(targets[i]);
  }
  return out;
}

Dataset Dataset::select_views(std::span<const std::string> names) const {
  Dataset out;
  out.labels = labels;
  out.targets = targets;
  for (const auto& name : names) {
    const auto it = std::find(view_names.begin(), view_names.end(), name);
    if (it == view_names.end()) {
      std::string valid;
      for (const auto& n : view_names) valid += (valid.empty() ? "" : ", ") + n;
      throw ConfigError("unknown view '" + name + "' (valid: " + valid + ")");
    }
    out.view_names.push_back(name);
    out.views.push_back(views[static_cast<std::size_t>(it - view_names.begin())]);
  }
  return out;
}

namespace {

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return idx;
}

}  // namespace

Metrics evaluate(const ModelConfig& model_config, const ModelParams& params, const Dataset& data,
                 std::size_t batch_size) {
  if (data.size() == 0) throw DataError("evaluate: empty evaluation set");
  if (batch_size == 0) throw ConfigError("evaluate: batch size must be positive");
  const DropoutConfig eval_mode{0.0, false};
  std::vector<int> predicted;
  std::vector<double> values;
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const auto idx = range_indices(begin, std::min(data.size(), begin + batch_size));
    const auto views = data.batches(idx);
    const Matrix out = model_forward(params, views, eval_mode, nullptr);
    const Targets t = data.targets_for(idx);
    loss_sum += task_loss(model_config.task, out, t).value * static_cast<double>(idx.size());
    if (model_config.task == Task::kClassification) {
      const auto cls = predict_classes(out);
      predicted.insert(predicted.end(), cls.begin(), cls.end());
    } else {
      for (std::size_t i = 0; i < out.rows(); ++i) values.push_back(out(i, 0));
    }
  }
  Metrics m = model_config.task == Task::kClassification
                  ? classification_metrics(predicted, data.labels)
                  : regression_metrics(values, data.targets);
  m.loss = loss_sum / static_cast<double>(data.size());
  return m;
}

namespace {

void check_dataset_finite(const Dataset& data, const char* what) {
  for (std::size_t v = 0; v < data.views.size(); ++v) {
    for (std::size_t i = 0; i < data.views[v].size(); ++i) {
      check_finite(data.views[v][i], std::string(what) + " sample " + std::to_string(i) + " view '" +
                                         (v < data.view_names.size() ? data.view_names[v] : "?") + "'");
    }
  }
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    if (!std::isfinite(data.targets[i])) {
      throw NumericError(std::string(what) + " sample " + std::to_string(i) + ": non-finite target");
    }
  }
}

}  // namespace

TrainResult train(const ModelConfig& model_config, ModelParams initial, const Dataset& train_set,
                  const Dataset* val_set, const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.size() == 0) throw DataError("train: empty training set");
  if (config.batch_size == 0) throw ConfigError("train: batch size must be positive");
  if (train_set.views.size() != model_config.num_views()) {
    throw ShapeError("train: dataset has " + std::to_string(train_set.views.size()) +
                     " views, model expects " + std::to_string(model_config.num_views()));
  }
  const bool have_val = val_set != nullptr && val_set->size() > 0;
  check_dataset_finite(train_set, "train:");
  if (have_val) check_dataset_finite(*val_set, "train: validation");

  TrainResult result;
  result.params = std::move(initial);
  RmsProp optimizer(result.params, config.rmsprop);
  Rng rng(mix_seed(config.seed + 1));
  const DropoutConfig train_mode{config.dropout, true};

  std::vector<std::size_t> order = range_indices(0, train_set.size());
  std::vector<double> epoch_losses;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const auto views = train_set.batches(idx);
      ModelCache cache;
      const Matrix out = model_forward(result.params, views, train_mode, &rng, &cache);
      const LossResult loss = task_loss(model_config.task, out, train_set.targets_for(idx));
      if (!std::isfinite(loss.value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch starting at " + std::to_string(begin));
      }
      loss_sum += loss.value * static_cast<double>(idx.size());
      const ModelParams grads = model_backward(result.params, cache, loss.grad);
      for (const auto& g : named_parameters(grads, model_config.view_names)) {
        check_finite(*g.value, "train: gradient of " + g.name);
      }
      optimizer.step(result.params, grads, config.learning_rate);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    epoch_losses.push_back(record.train_loss);
    if (have_val && (config.evaluate_each_epoch || epoch == config.epochs)) {
      record.val = evaluate(model_config, result.params, *val_set, config.eval_batch_size);
    }
    if (on_epoch) on_epoch(record);
    result.history.push_back(std::move(record));
  }
  if (have_val) {
    result.final_val = !result.history.empty() && result.history.back().val
                           ? *result.history.back().val
                           : evaluate(model_config, result.params, *val_set, config.eval_batch_size);
    result.final_val->epoch_losses = epoch_losses;
  }
  return result;
}

}  // namespace deepmood
