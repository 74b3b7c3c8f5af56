// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "deepmood/matrix.hpp"

namespace deepmood {

// Exponent arguments are clamped to +-kExpClamp so saturated inputs never
// overflow.
inline constexpr double kExpClamp = 40.0;

double sigmoid(double x);
double relu(double x);
// The derivative helpers take the pre-activation x, not the output.
double sigmoid_derivative(double x);
double tanh_derivative(double x);
double relu_derivative(double x);

Matrix sigmoid(const Matrix& x);
Matrix tanh(const Matrix& x);
Matrix relu(const Matrix& x);
Matrix sigmoid_derivative(const Matrix& x);
Matrix tanh_derivative(const Matrix& x);
Matrix relu_derivative(const Matrix& x);

/// Row-wise softmax computed with the log-sum-exp shift.
Matrix softmax(const Matrix& logits);

struct LossResult {
  double value = 0.0;
  /// Gradient of the batch-mean loss with respect to the head outputs.
  Matrix grad;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Fused softmax + cross entropy over a batch (rows) of c-class logits.
/// Labels are class indices in [0, c). Loss is the batch mean.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Mean squared error over a batch of single-output predictions (n x 1).
LossResult squared_error(const Matrix& predictions, std::span<const double> targets);

}  // namespace deepmood
