// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepmood/encoder.hpp"
#include "deepmood/fusion.hpp"
#include "deepmood/ops.hpp"

namespace deepmood {

enum class Task { kClassification, kRegression };

std::string_view task_name(Task task);
/// "hdrs" / "classification" and "ymrs" / "regression".
Task parse_task(std::string_view name);

/// Architecture of the late-fusion model: one GRU encoder per view, then a
/// single fusion head producing c = 2 logits (classification) or c = 1 value
/// (regression).
struct ModelConfig {
  std::vector<std::string> view_names;
  std::vector<std::size_t> view_input_dims;
  std::size_t hidden_dim = 8;
  std::size_t factors = 8;
  HeadKind head = HeadKind::kMultiViewMachine;
  Task task = Task::kClassification;
  bool bidirectional = true;

  std::size_t num_views() const { return view_names.size(); }
  std::size_t outputs() const { return task == Task::kClassification ? 2 : 1; }
  EncoderConfig encoder_config(std::size_t view) const;
  HeadShape head_shape() const;
  /// Throws ConfigError for inconsistent settings (e.g. MVM with one view).
  void validate() const;
};

struct ModelParams {
  std::vector<EncoderParams> encoders;
  HeadParams head;
};

inline constexpr double kInitBound = 0.08;

/// Every weight drawn uniformly from [-bound, bound].
ModelParams init_model(const ModelConfig& config, Rng& rng, double bound = kInitBound);
ModelParams zeros_like(const ModelParams& params);

struct NamedMatrix {
  std::string name;
  Matrix* value;
};
struct ConstNamedMatrix {
  std::string name;
  const Matrix* value;
};

/// Stable, name-tagged listing of every trainable array. Names look like
/// "enc/alph/fwd/W_r" or "head/mvm/U/1/2" (class 1, view 2).
std::vector<NamedMatrix> named_parameters(ModelParams& params,
                                          std::span<const std::string> view_names);
std::vector<ConstNamedMatrix> named_parameters(const ModelParams& params,
                                               std::span<const std::string> view_names);
std::size_t total_parameters(const ModelParams& params);

struct ModelCache {
  std::vector<EncoderCache> encoders;
  std::vector<Matrix> dropout_masks;
  FusionCache fusion;
};

/// Encoders -> dropout on each encoder output -> fusion head. `rng` is only
/// consumed in train mode with a non-zero dropout fraction.
Matrix model_forward(const ModelParams& params, std::span<const SequenceBatch> views,
                     const DropoutConfig& dropout_config, Rng* rng, ModelCache* cache = nullptr);

ModelParams model_backward(const ModelParams& params, const ModelCache& cache,
                           const Matrix& grad_output);

/// Batch targets: class labels for classification, real targets for
/// regression. Only the member matching the task is read.
struct Targets {
  std::vector<int> labels;
  std::vector<double> values;
};

LossResult task_loss(Task task, const Matrix& outputs, const Targets& targets);

}  // namespace deepmood
