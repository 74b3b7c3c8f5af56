// SPDX-License-Identifier: Apache-2.0
#include "deepmood/encoder.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "deepmood/errors.hpp"

namespace deepmood {

SequenceBatch SequenceBatch::from_sequences(std::span<const Matrix> sequences) {
  std::vector<std::size_t> all(sequences.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return from_sequences(sequences, all);
}

SequenceBatch SequenceBatch::from_sequences(std::span<const Matrix> sequences,
                                            std::span<const std::size_t> indices) {
  SequenceBatch batch;
  if (indices.empty()) return batch;
  const std::size_t dim = sequences[indices.front()].cols();
  std::size_t max_len = 0;
  for (std::size_t idx : indices) {
    const Matrix& s = sequences[idx];
    if (s.cols() != dim) {
      throw ShapeError("SequenceBatch: sequence " + std::to_string(idx) + " has " +
                       std::to_string(s.cols()) + " features, expected " + std::to_string(dim));
    }
    max_len = std::max(max_len, s.rows());
    batch.lengths.push_back(s.rows());
  }
  batch.steps.assign(max_len, Matrix(indices.size(), dim));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Matrix& s = sequences[indices[b]];
    for (std::size_t k = 0; k < s.rows(); ++k) {
      const auto src = s.row(k);
      std::copy(src.begin(), src.end(), batch.steps[k].row(b).begin());
    }
  }
  return batch;
}

Matrix SequenceBatch::mask() const {
  Matrix m(batch_size(), max_length());
  for (std::size_t i = 0; i < batch_size(); ++i)
    for (std::size_t k = 0; k < lengths[i]; ++k) m(i, k) = 1.0;
  return m;
}

std::vector<unsigned char> SequenceBatch::active_at(std::size_t step) const {
  std::vector<unsigned char> active(batch_size());
  for (std::size_t i = 0; i < batch_size(); ++i) active[i] = step < lengths[i] ? 1 : 0;
  return active;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  EncoderParams p;
  p.forward = GruParams::zeros(config.input_dim, config.hidden_dim);
  if (config.bidirectional) p.backward = GruParams::zeros(config.input_dim, config.hidden_dim);
  return p;
}

EncoderParams EncoderParams::uniform(const EncoderConfig& config, double bound, Rng& rng) {
  EncoderParams p;
  p.forward = GruParams::uniform(config.input_dim, config.hidden_dim, bound, rng);
  if (config.bidirectional) {
    p.backward = GruParams::uniform(config.input_dim, config.hidden_dim, bound, rng);
  }
  return p;
}

Matrix encode_sequence(const EncoderParams& params, const SequenceBatch& batch,
                       EncoderCache* cache) {
  const std::size_t n = batch.batch_size();
  const std::size_t dh = params.forward.hidden_dim();
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.lengths[i] == 0) {
      throw DataError("encode_sequence: sample " + std::to_string(i) + " has length 0");
    }
    if (batch.lengths[i] > batch.max_length()) {
      throw ShapeError("encode_sequence: sample length exceeds padded length");
    }
  }
  if (n > 0 && batch.input_dim() != params.forward.input_dim()) {
    throw ShapeError("encode_sequence: batch has " + std::to_string(batch.input_dim()) +
                     " features, encoder expects " + std::to_string(params.forward.input_dim()));
  }
  if (cache != nullptr) {
    cache->forward_steps.clear();
    cache->backward_steps.clear();
    cache->lengths = batch.lengths;
  }

  // Both directions keep their state unit-major (d_h x batch).
  const auto active_rows = [&](std::size_t k) {
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (k < batch.lengths[i]) rows.push_back(i);
    return rows;
  };
  const std::size_t out_dim = params.backward ? 2 * dh : dh;
  Matrix out(n, out_dim);

  Matrix h(dh, n);
  for (std::size_t k = 0; k < batch.max_length(); ++k) {
    GruPackedStep step = gru_packed_forward(params.forward, batch.steps[k], active_rows(k), h);
    if (cache != nullptr) cache->forward_steps.push_back(std::move(step));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dh; ++j) out(i, j) = h(j, i);
  if (!params.backward) return out;

  // Rows stay at zero until their own last real step, so each sample's
  // reverse pass starts at its true end.
  h = Matrix(dh, n);
  for (std::size_t k = batch.max_length(); k-- > 0;) {
    GruPackedStep step = gru_packed_forward(*params.backward, batch.steps[k], active_rows(k), h);
    if (cache != nullptr) cache->backward_steps.push_back(std::move(step));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dh; ++j) out(i, dh + j) = h(j, i);
  return out;
}

namespace {

// grad is d_h x batch
GruParams backprop_direction(const GruParams& params, const std::vector<GruPackedStep>& steps,
                             Matrix grad) {
  GruParams grads = GruParams::zeros(params.input_dim(), params.hidden_dim());
  for (std::size_t s = steps.size(); s-- > 0;) gru_packed_backward(params, steps[s], grad, grads);
  return grads;
}

}  // namespace

EncoderParams encode_sequence_backward(const EncoderParams& params, const EncoderCache& cache,
                                       const Matrix& grad_output) {
  const std::size_t n = cache.lengths.size();
  const std::size_t dh = params.forward.hidden_dim();
  const std::size_t out_dim = params.backward ? 2 * dh : dh;
  if (grad_output.rows() != n || grad_output.cols() != out_dim) {
    throw ShapeError("encode_sequence_backward: grad " + grad_output.shape_string() +
                     " for output (" + std::to_string(n) + "x" + std::to_string(out_dim) + ")");
  }
  if (params.backward.has_value() != !cache.backward_steps.empty() &&
      !cache.forward_steps.empty()) {
    throw ShapeError("encode_sequence_backward: cache direction count does not match params");
  }
  Matrix grad_fwd(dh, n);
  Matrix grad_bwd(dh, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dh; ++j) {
      grad_fwd(j, i) = grad_output(i, j);
      if (params.backward) grad_bwd(j, i) = grad_output(i, dh + j);
    }
  }
  EncoderParams grads;
  grads.forward = backprop_direction(params.forward, cache.forward_steps, std::move(grad_fwd));
  if (params.backward) {
    grads.backward = backprop_direction(*params.backward, cache.backward_steps, std::move(grad_bwd));
  }
  return grads;
}

}  // namespace deepmood
