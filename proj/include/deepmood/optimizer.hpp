// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "deepmood/matrix.hpp"
#include "deepmood/model.hpp"

namespace deepmood {

/// RMSProp with the squared-gradient average inside the square root:
///   acc   <- rho * acc + (1 - rho) * g^2
///   theta <- theta - lr * g / sqrt(acc + eps)
struct RmsPropSettings {
  double decay = 0.9;
  double epsilon = 1e-8;
};

/// Single-array update; all three matrices must share a shape.
void rmsprop_step(Matrix& param, const Matrix& grad, Matrix& accumulator, double learning_rate,
                  const RmsPropSettings& settings = {});

/// Optimizer state mirroring a ModelParams tree.
class RmsProp {
 public:
  RmsProp(const ModelParams& like, RmsPropSettings settings = {});

  void step(ModelParams& params, const ModelParams& grads, double learning_rate);

  const ModelParams& accumulators() const { return accumulators_; }
  const RmsPropSettings& settings() const { return settings_; }

 private:
  RmsPropSettings settings_;
  ModelParams accumulators_;
};

}  // namespace deepmood
