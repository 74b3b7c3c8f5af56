// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "deepmood/matrix.hpp"
#include "deepmood/rng.hpp"

namespace deepmood {

enum class HeadKind { kFullyConnected, kFactorizationMachine, kMultiViewMachine };

std::string_view head_name(HeadKind kind);
/// Accepts "fc", "fm" and "mvm".
HeadKind parse_head(std::string_view name);

/// One hidden relu layer: q = relu(W1 [h; 1]), y = W2 q.
struct FcParams {
  Matrix w1;  // k' x (d + 1)
  Matrix w2;  // c x k'
};

/// Per class a: y_a = |U_a h|^2 + w_a . [h; 1].
struct FmParams {
  std::vector<Matrix> factors;  // c entries, each k x d
  Matrix linear;                // c x (d + 1), row a is w_a
};

/// Per class a: y_a = sum_f prod_p (U_a^(p) [h^(p); 1])_f.
struct MvmParams {
  std::vector<std::vector<Matrix>> factors;  // [class][view], each k x (d_p + 1)
};

using HeadParams = std::variant<FcParams, FmParams, MvmParams>;

HeadKind head_kind(const HeadParams& params);

struct HeadShape {
  HeadKind kind = HeadKind::kMultiViewMachine;
  std::vector<std::size_t> view_dims;  // encoder output width per view
  std::size_t factors = 4;             // k
  std::size_t outputs = 2;             // c
  std::size_t total_dim() const;
};

/// Hidden width of the FC head, k' = c k, so all heads have comparable size.
std::size_t fc_hidden_units(std::size_t outputs, std::size_t factors);

HeadParams make_head(const HeadShape& shape, double bound, Rng& rng);
HeadParams zeros_like(const HeadParams& params);

Matrix fc_forward(const FcParams& params, const Matrix& h);
Matrix fm_forward(const FmParams& params, const Matrix& h);
Matrix mvm_forward(const MvmParams& params, std::span<const Matrix> per_view);

struct FusionCache {
  HeadKind kind = HeadKind::kFullyConnected;
  std::vector<Matrix> per_view;
  Matrix augmented;               // [h; 1] for FC and FM
  Matrix hidden_pre;              // FC pre-activation
  Matrix hidden;                  // FC relu output
  std::vector<Matrix> fm_q;       // per class, batch x k
  std::vector<std::vector<Matrix>> mvm_q;  // [class][view], batch x k
};

/// Dispatches on the head kind; FC and FM see the column concatenation of
/// the per-view inputs. Fills `cache` when non-null.
Matrix fusion_forward(const HeadParams& params, std::span<const Matrix> per_view,
                      FusionCache* cache = nullptr);

struct FusionGrads {
  HeadParams params;
  std::vector<Matrix> per_view;
};

FusionGrads fusion_backward(const HeadParams& params, const FusionCache& cache,
                            const Matrix& grad_output);

struct DropoutConfig {
  double fraction = 0.1;
  bool train_mode = false;
};

/// Inverted dropout. In train mode each entry is zeroed with probability
/// `fraction` and survivors are scaled by 1 / (1 - fraction); in eval mode the
/// input is returned unchanged. The applied multiplier is written to `mask`
/// when non-null. Throws ConfigError for fraction outside [0, 1).
Matrix dropout(const Matrix& x, const DropoutConfig& config, Rng& rng, Matrix* mask = nullptr);

/// Closed-form fusion parameter counts used to compare head complexity:
/// MVM c k (d + m); FM c k d + c (d + 1); FC c k' + k' (d + 1) with k' = c k.
std::size_t param_count(HeadKind kind, std::size_t views, std::size_t total_dim,
                        std::size_t factors, std::size_t outputs);
/// Number of scalars actually held by a constructed head.
std::size_t counted_parameters(const HeadParams& params);

}  // namespace deepmood
