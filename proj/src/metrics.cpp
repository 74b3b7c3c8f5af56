// SPDX-License-Identifier: Apache-2.0
#include "deepmood/metrics.hpp"

#include <cmath>
#include <string>

#include "deepmood/errors.hpp"

namespace deepmood {

std::vector<int> predict_classes(const Matrix& outputs) {
  std::vector<int> classes(outputs.rows());
  for (std::size_t i = 0; i < outputs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < outputs.cols(); ++j)
      if (outputs(i, j) > outputs(i, best)) best = j;
    classes[i] = static_cast<int>(best);
  }
  return classes;
}

Metrics classification_metrics(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) {
    throw ShapeError("classification_metrics: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw DataError("classification_metrics: empty evaluation set");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predicted[i] == 1;
    const bool true_pos = labels[i] == 1;
    if (predicted[i] == labels[i]) ++correct;
    if (pred_pos && true_pos) ++tp;
    if (pred_pos && !true_pos) ++fp;
    if (!pred_pos && true_pos) ++fn;
  }
  Metrics m;
  m.count = labels.size();
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f_score = m.precision + m.recall == 0.0
                  ? 0.0
                  : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Metrics regression_metrics(std::span<const double> predicted, std::span<const double> targets) {
  if (predicted.size() != targets.size()) {
    throw ShapeError("regression_metrics: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw DataError("regression_metrics: empty evaluation set");
  double sq = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = predicted[i] - targets[i];
    sq += d * d;
  }
  Metrics m;
  m.count = targets.size();
  m.rmse = std::sqrt(sq / static_cast<double>(targets.size()));
  return m;
}

}  // namespace deepmood
