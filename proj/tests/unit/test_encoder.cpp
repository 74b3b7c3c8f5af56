// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "deepmood/encoder.hpp"
#include "deepmood/errors.hpp"
#include "deepmood/gru.hpp"
#include "deepmood/ops.hpp"
#include "deepmood/rng.hpp"

using namespace deepmood;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

// Loop-only GRU step on one sample, written directly from the recurrence.
std::vector<double> scalar_gru(const GruParams& p, const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t dh = p.hidden_dim(), dx = p.input_dim();
  std::vector<double> r(dh), z(dh), out(dh);
  for (std::size_t i = 0; i < dh; ++i) {
    double ar = 0, az = 0;
    for (std::size_t j = 0; j < dx; ++j) {
      ar += p.w_r(i, j) * x[j];
      az += p.w_z(i, j) * x[j];
    }
    for (std::size_t j = 0; j < dh; ++j) {
      ar += p.u_r(i, j) * h[j];
      az += p.u_z(i, j) * h[j];
    }
    r[i] = 1.0 / (1.0 + std::exp(-ar));
    z[i] = 1.0 / (1.0 + std::exp(-az));
  }
  for (std::size_t i = 0; i < dh; ++i) {
    double a = 0;
    for (std::size_t j = 0; j < dx; ++j) a += p.w_h(i, j) * x[j];
    for (std::size_t j = 0; j < dh; ++j) a += p.u_h(i, j) * r[j] * h[j];
    out[i] = z[i] * h[i] + (1 - z[i]) * std::tanh(a);
  }
  return out;
}

std::vector<double> scalar_encode(const GruParams& p, const Matrix& seq, bool reverse) {
  std::vector<double> h(p.hidden_dim(), 0.0);
  for (std::size_t s = 0; s < seq.rows(); ++s) {
    const std::size_t t = reverse ? seq.rows() - 1 - s : s;
    const auto row = seq.row(t);
    h = scalar_gru(p, {row.begin(), row.end()}, h);
  }
  return h;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("zero GRU from zero state stays at zero with half-open gates") {
  const GruParams p = GruParams::zeros(3, 4);
  const auto step = gru_cell_forward(p, Matrix{{1.0, -2.0, 0.5}}, Matrix(1, 4));
  for (double v : step.cache.reset.data()) CHECK(v == 0.5);
  for (double v : step.cache.update.data()) CHECK(v == 0.5);
  for (double v : step.cache.candidate.data()) CHECK(v == 0.0);
  for (double v : step.h.data()) CHECK(v == 0.0);
}

TEST_CASE("zero GRU halves the previous state") {
  const GruParams p = GruParams::zeros(2, 3);
  const Matrix h_prev{{0.4, -0.8, 0.2}};
  const auto step = gru_cell_forward(p, Matrix{{3.0, 1.0}}, h_prev);
  for (std::size_t j = 0; j < 3; ++j) CHECK(step.h(0, j) == 0.5 * h_prev(0, j));
}

TEST_CASE("GRU cell matches scalar reference") {
  Rng rng(21);
  const GruParams p = GruParams::uniform(2, 3, 0.7, rng);
  const Matrix x = random_matrix(4, 2, rng);
  Matrix h(4, 3);
  for (double& v : h.data()) v = rng.uniform(-0.9, 0.9);
  const auto step = gru_cell_forward(p, x, h);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto xr = x.row(i);
    const auto hr = h.row(i);
    const auto want = scalar_gru(p, {xr.begin(), xr.end()}, {hr.begin(), hr.end()});
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(step.h(i, j) - want[j]) <= 1e-12);
  }
}

TEST_CASE("inactive rows carry the previous state bit-exactly") {
  Rng rng(2);
  const GruParams p = GruParams::uniform(2, 3, 0.5, rng);
  const Matrix x = random_matrix(2, 2, rng);
  const Matrix h{{0.1, 0.2, 0.3}, {-0.1, -0.2, -0.3}};
  const std::vector<unsigned char> active = {1, 0};
  const auto step = gru_cell_forward(p, x, h, active);
  for (std::size_t j = 0; j < 3; ++j) CHECK(step.h(1, j) == h(1, j));
  CHECK(step.h(0, 0) != h(0, 0));
}

TEST_CASE("packed GRU step matches the row-major cell bit for bit") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(9), dx = 1 + rng.uniform_index(4), dh = 1 + rng.uniform_index(5);
    const GruParams p = GruParams::uniform(dx, dh, 0.9, rng);
    const Matrix x = random_matrix(n, dx, rng);
    const Matrix h_prev = random_matrix(n, dh, rng);
    const Matrix grad_h = random_matrix(n, dh, rng);
    std::vector<unsigned char> active(n);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      active[i] = rng.uniform_index(3) != 0;
      if (active[i]) rows.push_back(i);
    }

    const auto ref = gru_cell_forward(p, x, h_prev, active);
    GruParams ref_grads = GruParams::zeros(dx, dh);
    Matrix ref_ghp(n, dh);
    gru_cell_backward_into(p, ref.cache, grad_h, ref_grads, nullptr, ref_ghp);

    Matrix h = transpose(h_prev);
    const auto step = gru_packed_forward(p, x, rows, h);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dh; ++j) CHECK(h(j, i) == ref.h(i, j));

    Matrix grad = transpose(grad_h);
    GruParams grads = GruParams::zeros(dx, dh);
    gru_packed_backward(p, step, grad, grads);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dh; ++j) CHECK(grad(j, i) == ref_ghp(i, j));
    const Matrix* a[] = {&grads.w_r, &grads.w_z, &grads.w_h, &grads.u_r, &grads.u_z, &grads.u_h};
    const Matrix* b[] = {&ref_grads.w_r, &ref_grads.w_z, &ref_grads.w_h,
                         &ref_grads.u_r, &ref_grads.u_z, &ref_grads.u_h};
    for (int m = 0; m < 6; ++m) CHECK(std::ranges::equal(a[m]->data(), b[m]->data()));
  }
}

TEST_CASE("GRU backward of a zero upstream gradient is zero") {
  Rng rng(4);
  const GruParams p = GruParams::uniform(3, 2, 0.5, rng);
  const auto step = gru_cell_forward(p, random_matrix(2, 3, rng), Matrix(2, 2, 0.3));
  const GruCellGrads g = gru_cell_backward(p, step.cache, Matrix(2, 2));
  for (const Matrix* m : {&g.params.w_r, &g.params.w_z, &g.params.w_h, &g.params.u_r, &g.params.u_z,
                          &g.params.u_h, &g.x, &g.h_prev}) {
    CHECK(max_abs(*m) == 0.0);
  }
}

TEST_CASE("GRU backward matches finite differences") {
  Rng rng(8);
  GruParams p = GruParams::uniform(3, 4, 0.5, rng);
  Matrix x = random_matrix(2, 3, rng);
  Matrix h(2, 4);
  for (double& v : h.data()) v = rng.uniform(-0.9, 0.9);
  const Matrix w = random_matrix(2, 4, rng);
  const auto loss = [&] {
    const Matrix out = gru_cell_forward(p, x, h).h;
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * w.data()[i];
    return s;
  };
  const GruCellGrads g = gru_cell_backward(p, gru_cell_forward(p, x, h).cache, w);
  const std::vector<std::pair<Matrix*, const Matrix*>> pairs = {
      {&p.w_r, &g.params.w_r}, {&p.u_r, &g.params.u_r}, {&p.w_z, &g.params.w_z}, {&p.u_z, &g.params.u_z},
      {&p.w_h, &g.params.w_h}, {&p.u_h, &g.params.u_h}, {&x, &g.x},           {&h, &g.h_prev}};
  const double step = 1e-6;
  for (auto [value, grad] : pairs) {
    for (std::size_t i = 0; i < value->size(); ++i) {
      double& v = value->data()[i];
      const double orig = v;
      v = orig + step;
      const double up = loss();
      v = orig - step;
      const double down = loss();
      v = orig;
      CHECK(rel(grad->data()[i], (up - down) / (2 * step)) <= 1e-5);
    }
  }
}

TEST_CASE("simple RNN cell") {
  CHECK(max_abs(simple_rnn_cell(Matrix(2, 3), Matrix(2, 2), Matrix{{1, 2, 3}}, Matrix{{0.5, -0.5}})) == 0.0);
  const Matrix h = simple_rnn_cell(Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{0.5}}, Matrix{{0.0}});
  CHECK(h(0, 0) == doctest::Approx(0.4621).epsilon(1e-4));
  CHECK(h(0, 0) == std::tanh(0.5));

  Rng rng(6);
  const Matrix w = random_matrix(3, 2, rng), u = random_matrix(3, 3, rng);
  const Matrix x = random_matrix(2, 2, rng), hp = random_matrix(2, 3, rng);
  const Matrix got = simple_rnn_cell(w, u, x, hp);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 3; ++i) {
      double a = 0;
      for (std::size_t j = 0; j < 2; ++j) a += w(i, j) * x(b, j);
      for (std::size_t j = 0; j < 3; ++j) a += u(i, j) * hp(b, j);
      CHECK(std::abs(got(b, i) - std::tanh(a)) <= 1e-12);
    }
  CHECK_THROWS_AS(simple_rnn_cell(w, u, Matrix(1, 3), Matrix(1, 3)), ShapeError);
}

TEST_CASE("length-1 sequence equals one cell step per direction") {
  Rng rng(10);
  const EncoderConfig cfg{3, 4, true};
  const EncoderParams p = EncoderParams::uniform(cfg, 0.5, rng);
  const std::vector<Matrix> seqs = {random_matrix(1, 3, rng)};
  const Matrix out = encode_sequence(p, SequenceBatch::from_sequences(seqs));
  REQUIRE(out.cols() == 8);
  const Matrix f = gru_cell_forward(p.forward, seqs[0], Matrix(1, 4)).h;
  const Matrix b = gru_cell_forward(*p.backward, seqs[0], Matrix(1, 4)).h;
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(out(0, j) == f(0, j));
    CHECK(out(0, 4 + j) == b(0, j));
  }
}

TEST_CASE("batched encoding equals per-sample scalar encoding") {
  Rng rng(12);
  for (bool bidir : {false, true}) {
    const EncoderConfig cfg{2, 3, bidir};
    const EncoderParams p = EncoderParams::uniform(cfg, 0.6, rng);
    const std::vector<Matrix> seqs = {random_matrix(5, 2, rng), random_matrix(1, 2, rng), random_matrix(7, 2, rng)};
    const Matrix out = encode_sequence(p, SequenceBatch::from_sequences(seqs));
    REQUIRE(out.rows() == 3);
    REQUIRE(out.cols() == cfg.output_dim());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto fwd = scalar_encode(p.forward, seqs[i], false);
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(out(i, j) - fwd[j]) <= 1e-12);
      if (bidir) {
        const auto bwd = scalar_encode(*p.backward, seqs[i], true);
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(out(i, 3 + j) - bwd[j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("padding content never reaches the output") {
  Rng rng(14);
  const EncoderConfig cfg{3, 4, true};
  const EncoderParams p = EncoderParams::uniform(cfg, 0.5, rng);
  const std::vector<Matrix> seqs = {random_matrix(2, 3, rng), random_matrix(9, 3, rng), random_matrix(5, 3, rng)};
  SequenceBatch batch = SequenceBatch::from_sequences(seqs);
  const Matrix clean = encode_sequence(p, batch);
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t t = 0; t < batch.max_length(); ++t)
      for (std::size_t i = 0; i < batch.batch_size(); ++i)
        if (t >= batch.lengths[i])
          for (double& v : batch.steps[t].row(i)) v = rng.normal(0.0, 100.0);
    CHECK(encode_sequence(p, batch) == clean);
  }
}

TEST_CASE("extra padding steps leave the output bit-identical") {
  Rng rng(15);
  const EncoderParams p = EncoderParams::uniform({2, 3, true}, 0.5, rng);
  const std::vector<Matrix> short_batch = {random_matrix(4, 2, rng), random_matrix(3, 2, rng)};
  std::vector<Matrix> long_batch = short_batch;
  long_batch.push_back(random_matrix(12, 2, rng));
  const Matrix a = encode_sequence(p, SequenceBatch::from_sequences(short_batch));
  const Matrix b = encode_sequence(p, SequenceBatch::from_sequences(long_batch));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(a(i, j) == b(i, j));
}

TEST_CASE("mask and lengths agree") {
  Rng rng(1);
  const std::vector<Matrix> seqs = {random_matrix(3, 2, rng), random_matrix(1, 2, rng)};
  const SequenceBatch batch = SequenceBatch::from_sequences(seqs);
  const Matrix mask = batch.mask();
  REQUIRE(mask.rows() == 2);
  REQUIRE(mask.cols() == 3);
  CHECK(mask(0, 2) == 1.0);
  CHECK(mask(1, 0) == 1.0);
  CHECK(mask(1, 1) == 0.0);
  const std::vector<Matrix> empty = {Matrix(0, 2)};
  CHECK_THROWS(encode_sequence(EncoderParams::zeros({2, 3, true}), SequenceBatch::from_sequences(empty)));
}

TEST_CASE("hidden states stay inside (-1, 1)") {
  Rng rng(16);
  const EncoderParams p = EncoderParams::uniform({3, 4, true}, 1.0, rng);
  std::vector<Matrix> seqs;
  for (int i = 0; i < 5; ++i) {
    Matrix m = random_matrix(30, 3, rng);
    for (double& v : m.data()) v *= 2.0;
    seqs.push_back(m);
  }
  const Matrix out = encode_sequence(p, SequenceBatch::from_sequences(seqs));
  for (double v : out.data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("encoder backward matches finite differences") {
  Rng rng(17);
  const EncoderConfig cfg{3, 4, true};
  EncoderParams p = EncoderParams::uniform(cfg, 0.5, rng);
  const std::vector<Matrix> seqs = {random_matrix(6, 3, rng), random_matrix(8, 3, rng), random_matrix(3, 3, rng)};
  const SequenceBatch batch = SequenceBatch::from_sequences(seqs);
  const Matrix w = random_matrix(3, 8, rng);
  EncoderCache cache;
  encode_sequence(p, batch, &cache);
  const EncoderParams g = encode_sequence_backward(p, cache, w);
  const auto loss = [&] {
    const Matrix out = encode_sequence(p, batch);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * w.data()[i];
    return s;
  };
  std::vector<std::pair<Matrix*, const Matrix*>> pairs;
  for (auto [pp, gg] : {std::pair{&p.forward, &g.forward}, std::pair{&*p.backward, &*g.backward}}) {
    for (auto [a, b] : {std::pair{&pp->w_r, &gg->w_r}, std::pair{&pp->u_r, &gg->u_r}, std::pair{&pp->w_z, &gg->w_z},
                        std::pair{&pp->u_z, &gg->u_z}, std::pair{&pp->w_h, &gg->w_h}, std::pair{&pp->u_h, &gg->u_h}}) {
      pairs.emplace_back(a, b);
    }
  }
  for (auto [value, grad] : pairs) {
    for (std::size_t i = 0; i < value->size(); ++i) {
      double& v = value->data()[i];
      const double orig = v;
      v = orig + 1e-6;
      const double up = loss();
      v = orig - 1e-6;
      const double down = loss();
      v = orig;
      const double num = (up - down) / 2e-6;
      CHECK(std::abs(grad->data()[i] - num) / std::max({std::abs(num), std::abs(grad->data()[i]), 1e-5}) <= 1e-4);
    }
  }
}
