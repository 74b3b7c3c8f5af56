// SPDX-License-Identifier: Apache-2.0
#include "deepmood/optimizer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "deepmood/errors.hpp"

namespace deepmood {

void rmsprop_step(Matrix& param, const Matrix& grad, Matrix& accumulator, double learning_rate,
                  const RmsPropSettings& settings) {
  if (!param.same_shape(grad) || !param.same_shape(accumulator)) {
    throw ShapeError("rmsprop_step: param " + param.shape_string() + ", grad " +
                     grad.shape_string() + ", accumulator " + accumulator.shape_string());
  }
  auto theta = param.data();
  auto g = grad.data();
  auto acc = accumulator.data();
  const double rho = settings.decay;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    acc[i] = rho * acc[i] + (1.0 - rho) * g[i] * g[i];
    theta[i] -= learning_rate * g[i] / std::sqrt(acc[i] + settings.epsilon);
  }
}

namespace {

// Positional names are enough here; only the traversal order matters.
std::vector<std::string> placeholder_names(const ModelParams& p) {
  std::vector<std::string> names;
  for (std::size_t v = 0; v < p.encoders.size(); ++v) names.push_back(std::to_string(v));
  return names;
}

}  // namespace

RmsProp::RmsProp(const ModelParams& like, RmsPropSettings settings)
    : settings_(settings), accumulators_(zeros_like(like)) {}

void RmsProp::step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  const auto names = placeholder_names(params);
  auto p = named_parameters(params, names);
  auto g = named_parameters(grads, names);
  auto a = named_parameters(accumulators_, names);
  if (p.size() != g.size() || p.size() != a.size()) {
    throw ShapeError("RmsProp::step: parameter trees differ (" + std::to_string(p.size()) +
                     " params, " + std::to_string(g.size()) + " grads)");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    rmsprop_step(*p[i].value, *g[i].value, *a[i].value, learning_rate, settings_);
  }
}

}  // namespace deepmood
