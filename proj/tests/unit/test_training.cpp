// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "deepmood/checkpoint.hpp"
#include "deepmood/errors.hpp"
#include "deepmood/gradcheck.hpp"
#include "deepmood/metrics.hpp"
#include "deepmood/model.hpp"
#include "deepmood/optimizer.hpp"
#include "deepmood/rng.hpp"
#include "deepmood/training.hpp"

using namespace deepmood;

namespace {

// Two views; the label shifts the mean of view "a", view "b" is pure noise.
Dataset separable_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.view_names = {"a", "b"};
  d.views.resize(2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    Matrix a(3 + rng.uniform_index(4), 2), b(4, 3);
    for (std::size_t t = 0; t < a.rows(); ++t) {
      a(t, 0) = rng.normal(y ? 1.0 : -1.0, 0.5);
      a(t, 1) = rng.normal();
    }
    for (double& v : b.data()) v = rng.normal();
    d.views[0].push_back(a);
    d.views[1].push_back(b);
    d.labels.push_back(y);
    d.targets.push_back(y ? 2.0 : -2.0);
  }
  return d;
}

ModelConfig small_model(HeadKind head, Task task = Task::kClassification) {
  ModelConfig c;
  c.view_names = {"a", "b"};
  c.view_input_dims = {2, 3};
  c.hidden_dim = 4;
  c.factors = 4;
  c.head = head;
  c.task = task;
  return c;
}

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v(b - a);
  std::iota(v.begin(), v.end(), a);
  return v;
}

bool params_equal(const ModelParams& a, const ModelParams& b, std::span<const std::string> views) {
  const auto pa = named_parameters(a, views);
  const auto pb = named_parameters(b, views);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(*pa[i].value == *pb[i].value)) return false;
  return true;
}

}  // namespace

TEST_CASE("rmsprop with zero gradient only decays the accumulator") {
  Matrix theta{{0.5, -1.0}};
  Matrix acc{{0.2, 0.4}};
  rmsprop_step(theta, Matrix(1, 2), acc, 0.001);
  CHECK(theta == Matrix{{0.5, -1.0}});
  CHECK(acc(0, 0) == doctest::Approx(0.18).epsilon(1e-15));
  CHECK(acc(0, 1) == doctest::Approx(0.36).epsilon(1e-15));
}

TEST_CASE("rmsprop single step by hand") {
  Matrix theta{{0.0}}, acc{{0.0}};
  rmsprop_step(theta, Matrix{{1.0}}, acc, 0.001);
  CHECK(acc(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(theta(0, 0) == doctest::Approx(-0.0031623).epsilon(1e-4));
  CHECK(theta(0, 0) == doctest::Approx(-0.001 / std::sqrt(0.1 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("rmsprop two steps match a scalar reference") {
  Matrix theta{{0.3, -0.2}}, acc(1, 2);
  const Matrix g{{0.7, -1.5}};
  double t0 = 0.3, t1 = -0.2, a0 = 0.0, a1 = 0.0;
  for (int s = 0; s < 2; ++s) {
    rmsprop_step(theta, g, acc, 0.01);
    a0 = 0.9 * a0 + 0.1 * 0.7 * 0.7;
    a1 = 0.9 * a1 + 0.1 * 1.5 * 1.5;
    t0 -= 0.01 * 0.7 / std::sqrt(a0 + 1e-8);
    t1 -= 0.01 * -1.5 / std::sqrt(a1 + 1e-8);
  }
  CHECK(std::abs(theta(0, 0) - t0) <= 1e-12);
  CHECK(std::abs(theta(0, 1) - t1) <= 1e-12);
  CHECK_THROWS_AS(rmsprop_step(theta, Matrix(2, 1), acc, 0.01), ShapeError);
}

TEST_CASE("temporal split takes the first 80 percent per user") {
  std::vector<SessionKey> keys;
  for (int i = 0; i < 10; ++i) keys.push_back({"a", 1000 * i, 1000 * i + 10});
  for (int i = 0; i < 5; ++i) keys.push_back({"b", 500 * i, 500 * i + 10});
  keys.push_back({"c", 0, 1});
  const SplitIndices s = temporal_split(keys);
  std::size_t a_train = 0, b_train = 0;
  for (std::size_t i : s.train) (keys[i].user_id == "a" ? a_train : b_train) += keys[i].user_id != "c";
  CHECK(a_train == 8);
  CHECK(b_train == 4);
  CHECK(s.val.size() == 3);
  CHECK(s.users_without_val == 1);
  CHECK(std::count(s.train.begin(), s.train.end(), 15) == 1);
  // the val part is the latest sessions
  for (std::size_t i : s.val) CHECK(keys[i].start_ms >= (keys[i].user_id == "a" ? 8000 : 2000));
}

TEST_CASE("temporal split is a partition and ignores input order") {
  Rng rng(3);
  std::vector<SessionKey> keys;
  for (int i = 0; i < 200; ++i) {
    keys.push_back({"u" + std::to_string(rng.uniform_index(7)), static_cast<std::int64_t>(rng.uniform_index(1000000)), 0});
  }
  const SplitIndices s = temporal_split(keys);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t i : s.val) CHECK(all.insert(i).second);
  CHECK(all.size() == keys.size());

  std::vector<std::size_t> perm = range(0, keys.size());
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<SessionKey> shuffled;
  for (std::size_t i : perm) shuffled.push_back(keys[i]);
  const SplitIndices t = temporal_split(shuffled);
  std::set<std::pair<std::string, std::int64_t>> a, b;
  for (std::size_t i : s.val) a.insert({keys[i].user_id, keys[i].start_ms});
  for (std::size_t i : t.val) b.insert({shuffled[i].user_id, shuffled[i].start_ms});
  CHECK(a == b);
}

TEST_CASE("HDRS dichotomization boundary") {
  CHECK(dichotomize_hdrs(7) == 0);
  CHECK(dichotomize_hdrs(8) == 1);
  CHECK(dichotomize_hdrs(0) == 0);
  CHECK(dichotomize_hdrs(30) == 1);
  CHECK_THROWS_AS(dichotomize_hdrs(-1), DataError);
}

TEST_CASE("classification metrics") {
  const std::vector<int> labels = {1, 0, 0, 0};
  const Metrics perfect = classification_metrics(labels, labels);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f_score == 1.0);
  const std::vector<int> pred = {1, 1, 0, 0};
  const Metrics m = classification_metrics(pred, labels);
  CHECK(m.accuracy == 0.75);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 1.0);
  CHECK(m.f_score == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(classification_metrics(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST_CASE("argmax ties go to class 0") {
  const auto classes = predict_classes(Matrix{{0.5, 0.5}, {0.1, 0.2}, {0.3, -1.0}});
  CHECK(classes == std::vector<int>{0, 1, 0});
}

TEST_CASE("constant regressor at the mean has RMSE equal to the population std") {
  const std::vector<double> y = {1.0, 4.0, 2.0, 9.0, 3.0};
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 5.0;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const std::vector<double> pred(5, mean);
  CHECK(regression_metrics(pred, y).rmse == doctest::Approx(std::sqrt(var / 5.0)).epsilon(1e-14));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const Dataset data = separable_set(40, 1);
  const ModelConfig cfg = small_model(HeadKind::kMultiViewMachine);
  Rng rng(1);
  const ModelParams init = init_model(cfg, rng);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 8;
  tc.learning_rate = 0.0;
  const TrainResult r = train(cfg, init, data, nullptr, tc);
  CHECK(params_equal(r.params, init, cfg.view_names));
}

TEST_CASE("each head fits a separable two-view set") {
  const Dataset all = separable_set(200, 2);
  const Dataset tr = all.subset(range(0, 160));
  const Dataset va = all.subset(range(160, 200));
  for (HeadKind head : {HeadKind::kFullyConnected, HeadKind::kFactorizationMachine, HeadKind::kMultiViewMachine}) {
    CAPTURE(head_name(head));
    const ModelConfig cfg = small_model(head);
    Rng rng(3);
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 16;
    tc.learning_rate = 0.01;
    tc.evaluate_each_epoch = false;
    const TrainResult r = train(cfg, init_model(cfg, rng), tr, &va, tc);
    REQUIRE(r.final_val);
    CHECK(r.final_val->accuracy >= 0.95);
    double first = 0, last = 0;
    for (std::size_t e = 0; e < 10; ++e) {
      first += r.history[e].train_loss;
      last += r.history[r.history.size() - 1 - e].train_loss;
    }
    CHECK(last < first);
  }
}

TEST_CASE("fixed seed replays the same loss series and parameters") {
  const Dataset data = separable_set(60, 4);
  for (Task task : {Task::kClassification, Task::kRegression}) {
    const ModelConfig cfg = small_model(HeadKind::kFactorizationMachine, task);
    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 16;
    tc.seed = 9;
    Rng r1(5), r2(5);
    const TrainResult a = train(cfg, init_model(cfg, r1), data, &data, tc);
    const TrainResult b = train(cfg, init_model(cfg, r2), data, &data, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(params_equal(a.params, b.params, cfg.view_names));
    tc.seed = 10;
    Rng r3(5);
    const TrainResult c = train(cfg, init_model(cfg, r3), data, &data, tc);
    CHECK_FALSE(params_equal(a.params, c.params, cfg.view_names));
  }
}

TEST_CASE("training input validation") {
  const ModelConfig cfg = small_model(HeadKind::kFullyConnected);
  Rng rng(1);
  const ModelParams p = init_model(cfg, rng);
  Dataset empty;
  empty.view_names = {"a", "b"};
  empty.views.resize(2);
  CHECK_THROWS_AS(train(cfg, p, empty, nullptr, {}), DataError);
  CHECK_THROWS_AS(evaluate(cfg, p, empty), DataError);
  const Dataset data = separable_set(10, 1);
  CHECK_THROWS_AS(data.select_views(std::vector<std::string>{"zz"}), ConfigError);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  Dataset data = separable_set(10, 1);
  data.views[0][3](0, 0) = std::nan("");
  const ModelConfig cfg = small_model(HeadKind::kFullyConnected);
  Rng rng(1);
  TrainConfig tc;
  tc.epochs = 1;
  CHECK_THROWS_AS(train(cfg, init_model(cfg, rng), data, nullptr, tc), NumericError);
}

TEST_CASE("end-to-end gradients pass finite differences, a corrupted gradient does not") {
  GradCheckOptions o;
  const GradCheckReport ok = run_gradcheck(o);
  CHECK(ok.passed());
  CHECK(ok.max_rel_error() <= 1e-4);
  o.corrupt = true;
  CHECK_FALSE(run_gradcheck(o).passed());
  o.corrupt = false;
  o.seed = 2;
  CHECK(run_gradcheck(o).passed());
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ModelConfig cfg = small_model(HeadKind::kMultiViewMachine, Task::kRegression);
  Rng rng(6);
  const ModelParams params = init_model(cfg, rng, 0.5);
  Checkpoint ck;
  ck.config = {{"model", model_config_to_json(cfg)}, {"note", "x"}};
  store_model(ck, params, cfg);
  std::stringstream buf;
  write_checkpoint(buf, ck);
  const Checkpoint back = read_checkpoint(buf);
  CHECK(back.config == ck.config);
  const ModelConfig cfg2 = model_config_from_json(back.config["model"]);
  CHECK(cfg2.view_names == cfg.view_names);
  CHECK(cfg2.head == cfg.head);
  CHECK(cfg2.task == cfg.task);
  CHECK(params_equal(load_model(back, cfg2), params, cfg.view_names));

  std::stringstream again;
  write_checkpoint(again, back);
  CHECK(again.str() == buf.str());
}

TEST_CASE("checkpoint rejects garbage and wrong shapes") {
  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS_AS(read_checkpoint(junk), DataError);

  const ModelConfig cfg = small_model(HeadKind::kFullyConnected);
  Rng rng(1);
  Checkpoint ck;
  store_model(ck, init_model(cfg, rng), cfg);
  std::stringstream buf;
  write_checkpoint(buf, ck);
  const std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);
  ModelConfig bigger = cfg;
  bigger.hidden_dim = 5;
  CHECK_THROWS_AS(load_model(ck, bigger), DataError);
}
