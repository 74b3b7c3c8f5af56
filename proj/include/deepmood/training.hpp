// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepmood/encoder.hpp"
#include "deepmood/metrics.hpp"
#include "deepmood/model.hpp"
#include "deepmood/optimizer.hpp"

namespace deepmood {

/// HDRS 0..7 -> 0 (negative), >= 8 -> 1. Throws DataError on a negative score.
int dichotomize_hdrs(int score);

inline constexpr int kHdrsPositiveThreshold = 8;

struct SessionKey {
  std::string user_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  /// Users with fewer than two sessions; all their sessions went to train.
  std::size_t users_without_val = 0;
};

/// Per-user chronological split: each user's sessions are ordered by start
/// time and the first floor(ratio * n) go to train, the rest to validation.
/// The result depends only on the multiset of keys, not their input order.
/// Indices refer to `sessions`.
SplitIndices temporal_split(std::span<const SessionKey> sessions, double ratio = 0.8);

/// Model-ready examples: one (length x d_x) sequence per view per sample plus
/// both label kinds.
struct Dataset {
  std::vector<std::string> view_names;
  std::vector<std::vector<Matrix>> views;  // [view][sample]
  std::vector<int> labels;                 // dichotomized HDRS
  std::vector<double> targets;             // YMRS

  std::size_t size() const { return labels.size(); }
  std::vector<SequenceBatch> batches(std::span<const std::size_t> indices) const;
  Targets targets_for(std::span<const std::size_t> indices) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Keeps only the named views, in the given order. Throws ConfigError on an
  /// unknown name.
  Dataset select_views(std::span<const std::string> names) const;
};

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 256;
  double learning_rate = 0.001;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  RmsPropSettings rmsprop;
  bool evaluate_each_epoch = true;
  std::size_t eval_batch_size = 256;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<Metrics> val;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::optional<Metrics> final_val;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch RMSProp over the full model. The train set is reshuffled each
/// epoch from a generator derived from `config.seed`; dropout draws come from
/// the same stream. Validation (when `val` is non-null and non-empty) runs in
/// eval mode after every epoch, or only after the last one.
TrainResult train(const ModelConfig& model_config, ModelParams initial, const Dataset& train_set,
                  const Dataset* val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Eval-mode metrics in fixed-order batches; accuracy/F-score for
/// classification, RMSE for regression, mean loss for both.
Metrics evaluate(const ModelConfig& model_config, const ModelParams& params, const Dataset& data,
                 std::size_t batch_size = 256);

}  // namespace deepmood
