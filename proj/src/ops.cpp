// SPDX-License-Identifier: Apache-2.0
#include "deepmood/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepmood/errors.hpp"

namespace deepmood {

namespace {

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out = x;
  for (double& v : out.data()) v = f(v);
  return out;
}

}  // namespace

double sigmoid(double x) {
  const double t = std::clamp(x, -kExpClamp, kExpClamp);
  return 1.0 / (1.0 + std::exp(-t));
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

double relu_derivative(double x) { return x > 0.0 ? 1.0 : 0.0; }

Matrix sigmoid(const Matrix& x) { return map(x, [](double v) { return sigmoid(v); }); }
Matrix tanh(const Matrix& x) { return map(x, [](double v) { return std::tanh(v); }); }
Matrix relu(const Matrix& x) { return map(x, [](double v) { return relu(v); }); }
Matrix sigmoid_derivative(const Matrix& x) {
  return map(x, [](double v) { return sigmoid_derivative(v); });
}
Matrix tanh_derivative(const Matrix& x) {
  return map(x, [](double v) { return tanh_derivative(v); });
}
Matrix relu_derivative(const Matrix& x) {
  return map(x, [](double v) { return relu_derivative(v); });
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double shift = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      out(i, j) = std::exp(row[j] - shift);
      z += out(i, j);
    }
    for (std::size_t j = 0; j < row.size(); ++j) out(i, j) /= z;
  }
  return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("softmax_cross_entropy: " + logits.shape_string() + " logits for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (logits.rows() == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  check_finite(logits, "softmax_cross_entropy logits");
  const auto n = static_cast<double>(logits.rows());
  LossResult result;
  result.grad = softmax(logits);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= logits.cols()) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(label) +
                      " outside [0," + std::to_string(logits.cols()) + ")");
    }
    const double p = std::clamp(result.grad(i, static_cast<std::size_t>(label)),
                                kProbabilityClamp, 1.0 - kProbabilityClamp);
    result.value -= std::log(p);
    result.grad(i, static_cast<std::size_t>(label)) -= 1.0;
  }
  result.value /= n;
  for (double& g : result.grad.data()) g /= n;
  return result;
}

LossResult squared_error(const Matrix& predictions, std::span<const double> targets) {
  if (predictions.cols() != 1 || predictions.rows() != targets.size()) {
    throw ShapeError("squared_error: " + predictions.shape_string() + " predictions for " +
                     std::to_string(targets.size()) + " targets");
  }
  if (predictions.rows() == 0) throw ShapeError("squared_error: empty batch");
  check_finite(predictions, "squared_error predictions");
  const auto n = static_cast<double>(predictions.rows());
  LossResult result;
  result.grad = Matrix(predictions.rows(), 1);
  for (std::size_t i = 0; i < predictions.rows(); ++i) {
    const double diff = predictions(i, 0) - targets[i];
    result.value += diff * diff;
    result.grad(i, 0) = 2.0 * diff / n;
  }
  result.value /= n;
  return result;
}

}  // namespace deepmood
