// SPDX-License-Identifier: Apache-2.0
#include "deepmood/model.hpp"

#include "deepmood/errors.hpp"

namespace deepmood {

std::string_view task_name(Task task) {
  return task == Task::kClassification ? "hdrs" : "ymrs";
}

Task parse_task(std::string_view name) {
  if (name == "hdrs" || name == "classification") return Task::kClassification;
  if (name == "ymrs" || name == "regression") return Task::kRegression;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected hdrs or ymrs)");
}

EncoderConfig ModelConfig::encoder_config(std::size_t view) const {
  return EncoderConfig{view_input_dims.at(view), hidden_dim, bidirectional};
}

HeadShape ModelConfig::head_shape() const {
  HeadShape shape;
  shape.kind = head;
  shape.factors = factors;
  shape.outputs = outputs();
  for (std::size_t v = 0; v < num_views(); ++v) {
    shape.view_dims.push_back(encoder_config(v).output_dim());
  }
  return shape;
}

void ModelConfig::validate() const {
  if (view_names.empty()) throw ConfigError("model: no views selected");
  if (view_names.size() != view_input_dims.size()) {
    throw ConfigError("model: view names and input dims differ in length");
  }
  if (hidden_dim == 0 || factors == 0) throw ConfigError("model: d_h and k must be positive");
  if (head == HeadKind::kMultiViewMachine && view_names.size() < 2) {
    throw ConfigError("model: the mvm head needs at least 2 views");
  }
  for (std::size_t dim : view_input_dims) {
    if (dim == 0) throw ConfigError("model: view with zero input features");
  }
}

ModelParams init_model(const ModelConfig& config, Rng& rng, double bound) {
  config.validate();
  ModelParams params;
  for (std::size_t v = 0; v < config.num_views(); ++v) {
    params.encoders.push_back(EncoderParams::uniform(config.encoder_config(v), bound, rng));
  }
  params.head = make_head(config.head_shape(), bound, rng);
  return params;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out;
  for (const auto& enc : params.encoders) {
    EncoderParams z;
    z.forward = GruParams::zeros(enc.forward.input_dim(), enc.forward.hidden_dim());
    if (enc.backward) z.backward = GruParams::zeros(enc.backward->input_dim(), enc.backward->hidden_dim());
    out.encoders.push_back(std::move(z));
  }
  out.head = zeros_like(params.head);
  return out;
}

namespace {

template <typename Params, typename Out, typename Make>
std::vector<Out> list_parameters(Params& params, std::span<const std::string> view_names,
                                 Make make) {
  std::vector<Out> out;
  auto gru = [&](auto& g, const std::string& prefix) {
    out.push_back(make(prefix + "W_r", g.w_r));
    out.push_back(make(prefix + "U_r", g.u_r));
    out.push_back(make(prefix + "W_z", g.w_z));
    out.push_back(make(prefix + "U_z", g.u_z));
    out.push_back(make(prefix + "W", g.w_h));
    out.push_back(make(prefix + "U", g.u_h));
  };
  if (view_names.size() != params.encoders.size()) {
    throw ShapeError("named_parameters: " + std::to_string(view_names.size()) +
                     " view names for " + std::to_string(params.encoders.size()) + " encoders");
  }
  for (std::size_t v = 0; v < params.encoders.size(); ++v) {
    auto& enc = params.encoders[v];
    gru(enc.forward, "enc/" + view_names[v] + "/fwd/");
    if (enc.backward) gru(*enc.backward, "enc/" + view_names[v] + "/bwd/");
  }
  std::visit(
      [&](auto& head) {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, FcParams>) {
          out.push_back(make("head/fc/W1", head.w1));
          out.push_back(make("head/fc/W2", head.w2));
        } else if constexpr (std::is_same_v<T, FmParams>) {
          for (std::size_t a = 0; a < head.factors.size(); ++a) {
            out.push_back(make("head/fm/U/" + std::to_string(a), head.factors[a]));
          }
          out.push_back(make("head/fm/w", head.linear));
        } else {
          for (std::size_t a = 0; a < head.factors.size(); ++a)
            for (std::size_t v = 0; v < head.factors[a].size(); ++v)
              out.push_back(make("head/mvm/U/" + std::to_string(a) + "/" + std::to_string(v),
                                 head.factors[a][v]));
        }
      },
      params.head);
  return out;
}

}  // namespace

std::vector<NamedMatrix> named_parameters(ModelParams& params,
                                          std::span<const std::string> view_names) {
  return list_parameters<ModelParams, NamedMatrix>(
      params, view_names, [](std::string name, Matrix& m) { return NamedMatrix{std::move(name), &m}; });
}

std::vector<ConstNamedMatrix> named_parameters(const ModelParams& params,
                                               std::span<const std::string> view_names) {
  return list_parameters<const ModelParams, ConstNamedMatrix>(
      params, view_names,
      [](std::string name, const Matrix& m) { return ConstNamedMatrix{std::move(name), &m}; });
}

std::size_t total_parameters(const ModelParams& params) {
  std::size_t n = counted_parameters(params.head);
  for (const auto& enc : params.encoders) {
    const auto& g = enc.forward;
    n += 3 * (g.w_r.size() + g.u_r.size());
    if (enc.backward) n += 3 * (enc.backward->w_r.size() + enc.backward->u_r.size());
  }
  return n;
}

Matrix model_forward(const ModelParams& params, std::span<const SequenceBatch> views,
                     const DropoutConfig& dropout_config, Rng* rng, ModelCache* cache) {
  if (views.size() != params.encoders.size()) {
    throw ShapeError("model_forward: " + std::to_string(views.size()) + " views for " +
                     std::to_string(params.encoders.size()) + " encoders");
  }
  const bool apply_dropout = dropout_config.train_mode && dropout_config.fraction > 0.0;
  if (apply_dropout && rng == nullptr) throw ConfigError("model_forward: dropout needs an Rng");
  if (cache != nullptr) {
    cache->encoders.assign(views.size(), EncoderCache{});
    cache->dropout_masks.assign(views.size(), Matrix{});
  }
  std::vector<Matrix> encoded;
  for (std::size_t v = 0; v < views.size(); ++v) {
    Matrix h = encode_sequence(params.encoders[v], views[v],
                               cache != nullptr ? &cache->encoders[v] : nullptr);
    if (apply_dropout) {
      h = dropout(h, dropout_config, *rng, cache != nullptr ? &cache->dropout_masks[v] : nullptr);
    }
    encoded.push_back(std::move(h));
  }
  Matrix out = fusion_forward(params.head, encoded, cache != nullptr ? &cache->fusion : nullptr);
  check_finite(out, "model_forward output");
  return out;
}

ModelParams model_backward(const ModelParams& params, const ModelCache& cache,
                           const Matrix& grad_output) {
  FusionGrads head_grads = fusion_backward(params.head, cache.fusion, grad_output);
  ModelParams grads;
  grads.head = std::move(head_grads.params);
  for (std::size_t v = 0; v < params.encoders.size(); ++v) {
    Matrix g = std::move(head_grads.per_view[v]);
    if (!cache.dropout_masks[v].empty()) g = hadamard(g, cache.dropout_masks[v]);
    grads.encoders.push_back(encode_sequence_backward(params.encoders[v], cache.encoders[v], g));
  }
  return grads;
}

LossResult task_loss(Task task, const Matrix& outputs, const Targets& targets) {
  if (task == Task::kClassification) return softmax_cross_entropy(outputs, targets.labels);
  return squared_error(outputs, targets.values);
}

}  // namespace deepmood
