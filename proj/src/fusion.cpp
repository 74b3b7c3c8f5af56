// SPDX-License-Identifier: Apache-2.0
#include "deepmood/fusion.hpp"

#include <numeric>

#include "deepmood/errors.hpp"
#include "deepmood/ops.hpp"

namespace deepmood {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

void expect_cols(const Matrix& m, std::size_t cols, const char* what) {
  if (m.cols() != cols) {
    throw ShapeError(std::string(what) + ": input " + m.shape_string() + " but head expects " +
                     std::to_string(cols) + " columns");
  }
}

Matrix drop_last_column(const Matrix& a) {
  Matrix out(a.rows(), a.cols() - 1);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j + 1 < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

std::vector<Matrix> split_columns(const Matrix& a, std::span<const Matrix> like) {
  std::vector<Matrix> parts;
  std::size_t offset = 0;
  for (const auto& p : like) {
    Matrix part(a.rows(), p.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) part(i, j) = a(i, offset + j);
    offset += p.cols();
    parts.push_back(std::move(part));
  }
  return parts;
}

Matrix fc_forward_impl(const FcParams& params, const Matrix& augmented, FusionCache* cache) {
  Matrix pre = matmul_nt(augmented, params.w1);
  Matrix q = relu(pre);
  Matrix y = matmul_nt(q, params.w2);
  if (cache != nullptr) {
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(q);
  }
  return y;
}

Matrix fm_forward_impl(const FmParams& params, const Matrix& h, const Matrix& augmented,
                       FusionCache* cache) {
  const std::size_t classes = params.factors.size();
  Matrix y = matmul_nt(augmented, params.linear);
  if (cache != nullptr) cache->fm_q.clear();
  for (std::size_t a = 0; a < classes; ++a) {
    Matrix q = matmul_nt(h, params.factors[a]);
    for (std::size_t i = 0; i < q.rows(); ++i) {
      double sq = 0.0;
      for (double v : q.row(i)) sq += v * v;
      y(i, a) += sq;
    }
    if (cache != nullptr) cache->fm_q.push_back(std::move(q));
  }
  return y;
}

}  // namespace

std::string_view head_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::kFullyConnected: return "fc";
    case HeadKind::kFactorizationMachine: return "fm";
    case HeadKind::kMultiViewMachine: return "mvm";
  }
  return "?";
}

HeadKind parse_head(std::string_view name) {
  if (name == "fc") return HeadKind::kFullyConnected;
  if (name == "fm") return HeadKind::kFactorizationMachine;
  if (name == "mvm") return HeadKind::kMultiViewMachine;
  throw ConfigError("unknown head '" + std::string(name) + "' (expected fc, fm or mvm)");
}

HeadKind head_kind(const HeadParams& params) {
  switch (params.index()) {
    case 0: return HeadKind::kFullyConnected;
    case 1: return HeadKind::kFactorizationMachine;
    default: return HeadKind::kMultiViewMachine;
  }
}

std::size_t HeadShape::total_dim() const {
  return std::accumulate(view_dims.begin(), view_dims.end(), std::size_t{0});
}

std::size_t fc_hidden_units(std::size_t outputs, std::size_t factors) { return outputs * factors; }

HeadParams make_head(const HeadShape& shape, double bound, Rng& rng) {
  const std::size_t d = shape.total_dim();
  const std::size_t c = shape.outputs;
  const std::size_t k = shape.factors;
  if (shape.view_dims.empty() || c == 0 || k == 0) {
    throw ConfigError("make_head: need at least one view, one output and one factor");
  }
  switch (shape.kind) {
    case HeadKind::kFullyConnected: {
      const std::size_t hidden = fc_hidden_units(c, k);
      FcParams p;
      p.w1 = uniform_matrix(hidden, d + 1, bound, rng);
      p.w2 = uniform_matrix(c, hidden, bound, rng);
      return p;
    }
    case HeadKind::kFactorizationMachine: {
      FmParams p;
      for (std::size_t a = 0; a < c; ++a) p.factors.push_back(uniform_matrix(k, d, bound, rng));
      p.linear = uniform_matrix(c, d + 1, bound, rng);
      return p;
    }
    case HeadKind::kMultiViewMachine: {
      if (shape.view_dims.size() < 2) {
        throw ConfigError("make_head: the multi-view machine head needs at least 2 views");
      }
      MvmParams p;
      p.factors.resize(c);
      for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t dim : shape.view_dims) {
          p.factors[a].push_back(uniform_matrix(k, dim + 1, bound, rng));
        }
      }
      return p;
    }
  }
  throw ConfigError("make_head: bad head kind");
}

HeadParams zeros_like(const HeadParams& params) {
  auto zero = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  return std::visit(
      [&](const auto& p) -> HeadParams {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FcParams>) {
          return FcParams{zero(p.w1), zero(p.w2)};
        } else if constexpr (std::is_same_v<T, FmParams>) {
          FmParams out;
          for (const auto& u : p.factors) out.factors.push_back(zero(u));
          out.linear = zero(p.linear);
          return out;
        } else {
          MvmParams out;
          out.factors.resize(p.factors.size());
          for (std::size_t a = 0; a < p.factors.size(); ++a)
            for (const auto& u : p.factors[a]) out.factors[a].push_back(zero(u));
          return out;
        }
      },
      params);
}

Matrix fc_forward(const FcParams& params, const Matrix& h) {
  expect_cols(h, params.w1.cols() - 1, "fc_forward");
  return fc_forward_impl(params, append_ones_column(h), nullptr);
}

Matrix fm_forward(const FmParams& params, const Matrix& h) {
  expect_cols(h, params.linear.cols() - 1, "fm_forward");
  return fm_forward_impl(params, h, append_ones_column(h), nullptr);
}

Matrix mvm_forward(const MvmParams& params, std::span<const Matrix> per_view) {
  return fusion_forward(HeadParams{params}, per_view, nullptr);
}

Matrix fusion_forward(const HeadParams& params, std::span<const Matrix> per_view,
                      FusionCache* cache) {
  if (per_view.empty()) throw ShapeError("fusion_forward: no views");
  const HeadKind kind = head_kind(params);
  if (cache != nullptr) {
    *cache = FusionCache{};
    cache->kind = kind;
    cache->per_view.assign(per_view.begin(), per_view.end());
  }
  if (kind == HeadKind::kMultiViewMachine) {
    const auto& p = std::get<MvmParams>(params);
    const std::size_t m = per_view.size();
    if (m < 2) throw ShapeError("mvm_forward: needs at least 2 views, got 1");
    if (p.factors.empty() || p.factors.front().size() != m) {
      throw ShapeError("mvm_forward: head built for " +
                       std::to_string(p.factors.empty() ? 0 : p.factors.front().size()) +
                       " views, got " + std::to_string(m));
    }
    const std::size_t batch = per_view.front().rows();
    const std::size_t classes = p.factors.size();
    Matrix y(batch, classes);
    std::vector<Matrix> augmented;
    for (std::size_t v = 0; v < m; ++v) {
      expect_cols(per_view[v], p.factors.front()[v].cols() - 1, "mvm_forward");
      augmented.push_back(append_ones_column(per_view[v]));
    }
    if (cache != nullptr) cache->mvm_q.resize(classes);
    for (std::size_t a = 0; a < classes; ++a) {
      std::vector<Matrix> q;
      for (std::size_t v = 0; v < m; ++v) q.push_back(matmul_nt(augmented[v], p.factors[a][v]));
      const std::size_t k = q.front().cols();
      for (std::size_t i = 0; i < batch; ++i) {
        double acc = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
          double prod = 1.0;
          for (std::size_t v = 0; v < m; ++v) prod *= q[v](i, f);
          acc += prod;
        }
        y(i, a) = acc;
      }
      if (cache != nullptr) cache->mvm_q[a] = std::move(q);
    }
    return y;
  }

  Matrix h = hconcat(per_view);
  Matrix augmented = append_ones_column(h);
  Matrix y;
  if (kind == HeadKind::kFullyConnected) {
    const auto& p = std::get<FcParams>(params);
    expect_cols(h, p.w1.cols() - 1, "fc_forward");
    y = fc_forward_impl(p, augmented, cache);
  } else {
    const auto& p = std::get<FmParams>(params);
    expect_cols(h, p.linear.cols() - 1, "fm_forward");
    y = fm_forward_impl(p, h, augmented, cache);
  }
  if (cache != nullptr) cache->augmented = std::move(augmented);
  return y;
}

FusionGrads fusion_backward(const HeadParams& params, const FusionCache& cache,
                            const Matrix& grad_output) {
  const HeadKind kind = head_kind(params);
  if (kind != cache.kind || cache.per_view.empty()) {
    throw ShapeError("fusion_backward: cache was produced by the " +
                     std::string(head_name(cache.kind)) + " head, params are " +
                     std::string(head_name(kind)));
  }
  const std::size_t batch = cache.per_view.front().rows();
  if (grad_output.rows() != batch) {
    throw ShapeError("fusion_backward: grad " + grad_output.shape_string() + " for batch " +
                     std::to_string(batch));
  }
  FusionGrads grads;
  grads.params = zeros_like(params);

  if (kind == HeadKind::kFullyConnected) {
    const auto& p = std::get<FcParams>(params);
    auto& g = std::get<FcParams>(grads.params);
    g.w2 = matmul_tn(grad_output, cache.hidden);
    Matrix d_hidden = matmul(grad_output, p.w2);
    Matrix d_pre = hadamard(d_hidden, relu_derivative(cache.hidden_pre));
    g.w1 = matmul_tn(d_pre, cache.augmented);
    grads.per_view = split_columns(drop_last_column(matmul(d_pre, p.w1)), cache.per_view);
    return grads;
  }

  if (kind == HeadKind::kFactorizationMachine) {
    const auto& p = std::get<FmParams>(params);
    auto& g = std::get<FmParams>(grads.params);
    g.linear = matmul_tn(grad_output, cache.augmented);
    Matrix d_aug = matmul(grad_output, p.linear);
    const Matrix h = drop_last_column(cache.augmented);
    for (std::size_t a = 0; a < p.factors.size(); ++a) {
      Matrix d_q = cache.fm_q[a];
      for (std::size_t i = 0; i < batch; ++i) {
        for (double& v : d_q.row(i)) v *= 2.0 * grad_output(i, a);
      }
      g.factors[a] = matmul_tn(d_q, h);
      Matrix d_h = matmul(d_q, p.factors[a]);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < d_h.cols(); ++j) d_aug(i, j) += d_h(i, j);
    }
    grads.per_view = split_columns(drop_last_column(d_aug), cache.per_view);
    return grads;
  }

  const auto& p = std::get<MvmParams>(params);
  auto& g = std::get<MvmParams>(grads.params);
  const std::size_t m = cache.per_view.size();
  std::vector<Matrix> augmented;
  for (const auto& v : cache.per_view) augmented.push_back(append_ones_column(v));
  std::vector<Matrix> d_aug;
  for (const auto& a : augmented) d_aug.emplace_back(a.rows(), a.cols());
  for (std::size_t a = 0; a < p.factors.size(); ++a) {
    const auto& q = cache.mvm_q[a];
    const std::size_t k = q.front().cols();
    for (std::size_t v = 0; v < m; ++v) {
      Matrix d_q(batch, k);
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t f = 0; f < k; ++f) {
          double others = grad_output(i, a);
          for (std::size_t w = 0; w < m; ++w)
            if (w != v) others *= q[w](i, f);
          d_q(i, f) = others;
        }
      }
      g.factors[a][v] = matmul_tn(d_q, augmented[v]);
      axpy(d_aug[v], matmul(d_q, p.factors[a][v]));
    }
  }
  for (auto& d : d_aug) grads.per_view.push_back(drop_last_column(d));
  return grads;
}

Matrix dropout(const Matrix& x, const DropoutConfig& config, Rng& rng, Matrix* mask) {
  if (!(config.fraction >= 0.0 && config.fraction < 1.0)) {
    throw ConfigError("dropout fraction must be in [0, 1), got " + std::to_string(config.fraction));
  }
  if (!config.train_mode || config.fraction == 0.0) {
    if (mask != nullptr) *mask = Matrix(x.rows(), x.cols(), 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - config.fraction);
  Matrix multiplier(x.rows(), x.cols());
  for (double& v : multiplier.data()) v = rng.bernoulli(config.fraction) ? 0.0 : keep_scale;
  Matrix out = hadamard(x, multiplier);
  if (mask != nullptr) *mask = std::move(multiplier);
  return out;
}

std::size_t param_count(HeadKind kind, std::size_t views, std::size_t total_dim,
                        std::size_t factors, std::size_t outputs) {
  const std::size_t c = outputs;
  const std::size_t k = factors;
  const std::size_t d = total_dim;
  switch (kind) {
    case HeadKind::kMultiViewMachine: return c * k * (d + views);
    case HeadKind::kFactorizationMachine: return c * k * d + c * (d + 1);
    case HeadKind::kFullyConnected: {
      const std::size_t hidden = fc_hidden_units(c, k);
      return c * hidden + hidden * (d + 1);
    }
  }
  return 0;
}

std::size_t counted_parameters(const HeadParams& params) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FcParams>) {
          return p.w1.size() + p.w2.size();
        } else if constexpr (std::is_same_v<T, FmParams>) {
          std::size_t n = p.linear.size();
          for (const auto& u : p.factors) n += u.size();
          return n;
        } else {
          std::size_t n = 0;
          for (const auto& per_class : p.factors)
            for (const auto& u : per_class) n += u.size();
          return n;
        }
      },
      params);
}

}  // namespace deepmood
