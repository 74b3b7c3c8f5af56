// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "deepmood/gru.hpp"
#include "deepmood/matrix.hpp"
#include "deepmood/rng.hpp"

namespace deepmood {

struct EncoderConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 8;
  bool bidirectional = true;

  std::size_t output_dim() const { return bidirectional ? 2 * hidden_dim : hidden_dim; }
};

/// Padded batch of variable-length sequences. `steps[k]` holds timestep k for
/// every sample (batch x d_x); positions k >= lengths[i] are padding.
struct SequenceBatch {
  std::vector<Matrix> steps;
  std::vector<std::size_t> lengths;

  /// Builds a zero-padded batch from per-sample (length x d_x) sequences.
  static SequenceBatch from_sequences(std::span<const Matrix> sequences);
  /// Same, selecting `indices` out of `sequences`.
  static SequenceBatch from_sequences(std::span<const Matrix> sequences,
                                      std::span<const std::size_t> indices);

  std::size_t batch_size() const { return lengths.size(); }
  std::size_t max_length() const { return steps.size(); }
  std::size_t input_dim() const { return steps.empty() ? 0 : steps.front().cols(); }
  /// 1 at (i, k) for k < lengths[i], else 0.
  Matrix mask() const;
  /// Activity flags for one timestep, one byte per sample.
  std::vector<unsigned char> active_at(std::size_t step) const;
};

/// Forward and (optionally) reverse GRU of one view.
struct EncoderParams {
  GruParams forward;
  std::optional<GruParams> backward;

  static EncoderParams zeros(const EncoderConfig& config);
  static EncoderParams uniform(const EncoderConfig& config, double bound, Rng& rng);
};

struct EncoderCache {
  std::vector<GruPackedStep> forward_steps;
  /// Reverse-direction caches in processing order (last timestep first).
  std::vector<GruPackedStep> backward_steps;
  std::vector<std::size_t> lengths;
};

/// Final hidden state per sample: batch x d_h, or batch x 2 d_h laid out as
/// [forward state after the last real step ; reverse state after step 0].
/// Both directions start from h_0 = 0. Throws DataError on a zero-length
/// sample. `cache` is filled when non-null.
Matrix encode_sequence(const EncoderParams& params, const SequenceBatch& batch,
                       EncoderCache* cache = nullptr);

/// Parameter gradients of the encoder given d(loss)/d(output).
EncoderParams encode_sequence_backward(const EncoderParams& params, const EncoderCache& cache,
                                       const Matrix& grad_output);

}  // namespace deepmood
