// SPDX-License-Identifier: Apache-2.0
#include "deepmood/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "deepmood/encoder.hpp"
#include "deepmood/fusion.hpp"
#include "deepmood/gru.hpp"
#include "deepmood/model.hpp"
#include "deepmood/rng.hpp"

namespace deepmood {

namespace {

// Large enough that gates and heads operate away from their linear regime.
constexpr double kParamBound = 0.5;

struct Probe {
  std::string name;
  Matrix* value;
  const Matrix* analytic;
};

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

double project(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  const auto a = out.data();
  const auto b = weights.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void gru_probes(std::vector<Probe>& probes, const std::string& prefix, GruParams& p,
                const GruParams& g) {
  probes.push_back({prefix + "W_r", &p.w_r, &g.w_r});
  probes.push_back({prefix + "U_r", &p.u_r, &g.u_r});
  probes.push_back({prefix + "W_z", &p.w_z, &g.w_z});
  probes.push_back({prefix + "U_z", &p.u_z, &g.u_z});
  probes.push_back({prefix + "W", &p.w_h, &g.w_h});
  probes.push_back({prefix + "U", &p.u_h, &g.u_h});
}

void compare(GradCheckReport& report, const std::string& check, const std::vector<Probe>& probes,
             const std::function<double()>& loss, const GradCheckOptions& o) {
  for (const auto& p : probes) {
    Matrix grad = *p.analytic;
    auto g = grad.data();
    if (o.corrupt && !g.empty()) g[0] += 1e-3 * (1.0 + std::abs(g[0]));
    GradCheckEntry e{check, p.name, g.size(), 0.0, 0.0};
    auto values = p.value->data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + o.step;
      const double up = loss();
      values[i] = orig - o.step;
      const double down = loss();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * o.step);
      const double abs_err = std::abs(g[i] - numeric);
      const double rel_err = abs_err / std::max({std::abs(g[i]), std::abs(numeric), o.floor});
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel_err);
    }
    report.entries.push_back(std::move(e));
  }
}

void check_gru_cell(GradCheckReport& report, Rng& rng, const GradCheckOptions& o) {
  GruParams params = GruParams::uniform(3, 4, kParamBound, rng);
  Matrix x = random_matrix(2, 3, rng);
  Matrix h_prev(2, 4);
  for (double& v : h_prev.data()) v = rng.uniform(-0.9, 0.9);
  const Matrix weights = random_matrix(2, 4, rng);

  const auto step = gru_cell_forward(params, x, h_prev);
  const GruCellGrads grads = gru_cell_backward(params, step.cache, weights);
  std::vector<Probe> probes;
  gru_probes(probes, "", params, grads.params);
  probes.push_back({"x", &x, &grads.x});
  probes.push_back({"h_prev", &h_prev, &grads.h_prev});
  compare(report, "gru_cell", probes,
          [&] { return project(gru_cell_forward(params, x, h_prev).h, weights); }, o);
}

void check_encoder(GradCheckReport& report, Rng& rng, const GradCheckOptions& o, bool bidirectional) {
  const EncoderConfig config{3, 4, bidirectional};
  EncoderParams params = EncoderParams::uniform(config, kParamBound, rng);
  const std::vector<std::size_t> lengths = {5, 8, 2};
  std::vector<Matrix> seqs;
  for (std::size_t n : lengths) seqs.push_back(random_matrix(n, config.input_dim, rng));
  const SequenceBatch batch = SequenceBatch::from_sequences(seqs);
  const Matrix weights = random_matrix(lengths.size(), config.output_dim(), rng);

  EncoderCache cache;
  encode_sequence(params, batch, &cache);
  const EncoderParams grads = encode_sequence_backward(params, cache, weights);
  std::vector<Probe> probes;
  gru_probes(probes, "fwd/", params.forward, grads.forward);
  if (bidirectional) gru_probes(probes, "bwd/", *params.backward, *grads.backward);
  compare(report, bidirectional ? "encoder/bidirectional" : "encoder/forward", probes,
          [&] { return project(encode_sequence(params, batch), weights); }, o);
}

void check_head(GradCheckReport& report, Rng& rng, const GradCheckOptions& o, HeadKind kind) {
  const HeadShape shape{kind, {3, 4, 2}, 3, 2};
  ModelParams holder;
  holder.head = make_head(shape, kParamBound, rng);
  const std::size_t batch = 3;
  std::vector<Matrix> inputs;
  for (std::size_t d : shape.view_dims) inputs.push_back(random_matrix(batch, d, rng));
  const Matrix weights = random_matrix(batch, shape.outputs, rng);

  FusionCache cache;
  fusion_forward(holder.head, inputs, &cache);
  ModelParams grad_holder;
  FusionGrads grads = fusion_backward(holder.head, cache, weights);
  grad_holder.head = std::move(grads.params);

  const std::vector<std::string> no_views;
  auto p = named_parameters(holder, no_views);
  const auto g = named_parameters(std::as_const(grad_holder), no_views);
  std::vector<Probe> probes;
  for (std::size_t i = 0; i < p.size(); ++i) probes.push_back({p[i].name.substr(5), p[i].value, g[i].value});
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    probes.push_back({"input/" + std::to_string(v), &inputs[v], &grads.per_view[v]});
  }
  compare(report, "head/" + std::string(head_name(kind)), probes,
          [&] { return project(fusion_forward(holder.head, inputs), weights); }, o);
}

void check_model(GradCheckReport& report, Rng& rng, const GradCheckOptions& o, HeadKind kind,
                 Task task) {
  ModelConfig config;
  config.view_names = {"alph", "spec", "accel"};
  config.view_input_dims = {4, 6, 3};
  config.hidden_dim = 3;
  config.factors = 3;
  config.head = kind;
  config.task = task;
  ModelParams params = init_model(config, rng, kParamBound);

  const std::size_t batch = 4;
  std::vector<SequenceBatch> views;
  for (std::size_t v = 0; v < config.num_views(); ++v) {
    std::vector<Matrix> seqs;
    for (std::size_t i = 0; i < batch; ++i) {
      seqs.push_back(random_matrix(2 + rng.uniform_index(7), config.view_input_dims[v], rng));
    }
    views.push_back(SequenceBatch::from_sequences(seqs));
  }
  Targets targets;
  for (std::size_t i = 0; i < batch; ++i) {
    targets.labels.push_back(static_cast<int>(i % 2));
    targets.values.push_back(rng.normal());
  }
  const DropoutConfig no_dropout{0.0, false};

  ModelCache cache;
  const Matrix out = model_forward(params, views, no_dropout, nullptr, &cache);
  const LossResult loss = task_loss(task, out, targets);
  const ModelParams grads = model_backward(params, cache, loss.grad);

  auto p = named_parameters(params, config.view_names);
  const auto g = named_parameters(grads, config.view_names);
  std::vector<Probe> probes;
  for (std::size_t i = 0; i < p.size(); ++i) probes.push_back({p[i].name, p[i].value, g[i].value});
  compare(report, "model/" + std::string(head_name(kind)) + "/" + std::string(task_name(task)), probes,
          [&] { return task_loss(task, model_forward(params, views, no_dropout, nullptr), targets).value; },
          o);
}

}  // namespace

bool GradCheckReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [&](const GradCheckEntry& e) {
    return e.max_rel_error <= tolerance;
  });
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckReport::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-22s %-22s %7s %12s %12s  %s\n", "check", "parameter", "entries",
                "max_rel", "max_abs", "verdict");
  os << line;
  for (const auto& e : entries) {
    std::snprintf(line, sizeof(line), "%-22s %-22s %7zu %12.3e %12.3e  %s\n", e.check.c_str(),
                  e.parameter.c_str(), e.entries, e.max_rel_error, e.max_abs_error,
                  e.max_rel_error <= tolerance ? "ok" : "FAIL");
    os << line;
  }
  return os.str();
}

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;
  Rng rng(options.seed);
  check_gru_cell(report, rng, options);
  check_encoder(report, rng, options, false);
  check_encoder(report, rng, options, true);
  for (HeadKind kind : {HeadKind::kFullyConnected, HeadKind::kFactorizationMachine, HeadKind::kMultiViewMachine}) {
    check_head(report, rng, options, kind);
  }
  for (HeadKind kind : {HeadKind::kFullyConnected, HeadKind::kFactorizationMachine, HeadKind::kMultiViewMachine}) {
    for (Task task : {Task::kClassification, Task::kRegression}) check_model(report, rng, options, kind, task);
  }
  return report;
}

}  // namespace deepmood
