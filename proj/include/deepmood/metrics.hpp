// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepmood/matrix.hpp"

namespace deepmood {

struct Metrics {
  std::size_t count = 0;
  double loss = 0.0;
  // classification
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  // regression
  double rmse = 0.0;
  std::vector<double> epoch_losses;
};

/// Argmax over each row; ties go to the lower class index.
std::vector<int> predict_classes(const Matrix& outputs);

/// Accuracy plus precision/recall/F1 of the positive class (label 1). With no
/// predicted (or actual) positives the affected ratio is defined as 0.
Metrics classification_metrics(std::span<const int> predicted, std::span<const int> labels);

Metrics regression_metrics(std::span<const double> predicted, std::span<const double> targets);

}  // namespace deepmood
