// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepmood/matrix.hpp"
#include "deepmood/rng.hpp"

namespace deepmood {

/// Weights of one GRU direction. Input weights are d_h x d_x, recurrent
/// weights d_h x d_h. The cell has no bias vectors.
struct GruParams {
  Matrix w_r, w_z, w_h;
  Matrix u_r, u_z, u_h;

  static GruParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  static GruParams uniform(std::size_t input_dim, std::size_t hidden_dim, double bound, Rng& rng);

  std::size_t input_dim() const { return w_r.cols(); }
  std::size_t hidden_dim() const { return w_r.rows(); }
  /// Throws ShapeError unless all six shapes agree with (input_dim, hidden_dim).
  void validate() const;
};

/// Intermediates kept by a forward step. Rows flagged inactive were carried
/// through unchanged and are skipped by the backward pass.
struct GruStepCache {
  Matrix x;
  Matrix h_prev;
  Matrix reset;
  Matrix update;
  Matrix candidate;
  std::vector<unsigned char> active;
};

struct GruStep {
  Matrix h;
  GruStepCache cache;
};

/// One step over a batch (rows). `x` is batch x d_x and `h_prev` batch x d_h.
/// With a non-empty `active` mask, rows whose flag is 0 are never read from
/// `x`; their output equals `h_prev` bit for bit.
GruStep gru_cell_forward(const GruParams& params, const Matrix& x, const Matrix& h_prev,
                         std::span<const unsigned char> active = {});

struct GruCellGrads {
  GruParams params;
  Matrix x;
  Matrix h_prev;
};

GruCellGrads gru_cell_backward(const GruParams& params, const GruStepCache& cache,
                               const Matrix& grad_h);

/// Accumulating form used by backprop through time: adds parameter gradients
/// into `grad_params`, writes the input gradient into `grad_x` when non-null,
/// and overwrites `grad_h_prev`.
void gru_cell_backward_into(const GruParams& params, const GruStepCache& cache,
                            const Matrix& grad_h, GruParams& grad_params, Matrix* grad_x,
                            Matrix& grad_h_prev);

/// Packed form of one step, used by the encoder. Only the active rows are
/// gathered, and everything is stored unit-major (features x active rows) so
/// the inner loops run along the batch. The arithmetic is ordered like
/// gru_cell_forward / gru_cell_backward_into, so both give identical bits.
struct GruPackedStep {
  std::vector<std::size_t> rows;  // active batch rows, ascending
  Matrix x;                       // d_x x rows
  Matrix h_prev;                  // d_h x rows
  Matrix reset;                   // d_h x rows
  Matrix update;
  Matrix candidate;
};

/// `x` is batch x d_x; `h` is the unit-major state (d_h x batch) and is
/// advanced in place for the listed rows. Other columns are left untouched.
GruPackedStep gru_packed_forward(const GruParams& params, const Matrix& x,
                                 std::vector<std::size_t> rows, Matrix& h);

/// `grad` holds d(loss)/dh as d_h x batch and is replaced by d(loss)/dh_prev;
/// parameter gradients are accumulated into `grad_params`.
void gru_packed_backward(const GruParams& params, const GruPackedStep& step, Matrix& grad,
                         GruParams& grad_params);

/// h = tanh(W x + U h_prev) over a batch, for comparison against the GRU.
Matrix simple_rnn_cell(const Matrix& w, const Matrix& u, const Matrix& x, const Matrix& h_prev);

}  // namespace deepmood
