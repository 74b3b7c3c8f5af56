// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepmood/checkpoint.hpp"
#include "deepmood/matrix.hpp"
#include "deepmood/sessions.hpp"
#include "deepmood/training.hpp"

namespace deepmood {

inline constexpr std::size_t kNumViews = 3;
inline const std::array<std::string, kNumViews> kViewNames = {"alph", "spec", "accel"};
inline constexpr std::array<std::size_t, kNumViews> kViewDims = {4, kNumSpecialKeys, 3};

struct FeatureOptions {
  /// log(1 + x) on keypress duration and time-since-last.
  bool log_transform = true;
};

/// One session as model input, before standardization.
struct FeaturizedSession {
  std::string user_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  int hdrs = 0;
  int ymrs = 0;
  std::array<Matrix, kNumViews> views;  // alph n1 x 4, spec n2 x 6, accel n3 x 3
};

/// Throws DataError for an unlabeled session or a duration/interval below
/// -1 ms (log1p undefined).
FeaturizedSession featurize(const Session& session, const FeatureOptions& options = {});

std::vector<SessionKey> session_keys(std::span<const FeaturizedSession> sessions);

/// All three views in canonical order; labels are dichotomized HDRS and
/// targets raw YMRS.
Dataset make_dataset(std::span<const FeaturizedSession> sessions);

/// Per-view column mean and population standard deviation, pooled over all
/// timesteps of all samples. The one-hot special-key view is left as is.
class Standardizer {
 public:
  struct ViewStats {
    std::string view;
    Matrix mean;  // 1 x d
    Matrix std;   // 1 x d, zero-variance columns stored as 1
  };

  static Standardizer fit(const Dataset& train);
  /// Standardizes every view that has stats; views without stats pass through.
  void apply(Dataset& data) const;

  const std::vector<ViewStats>& stats() const { return stats_; }

  void store(Checkpoint& checkpoint) const;
  /// Reads "norm/<view>/mean|std" arrays for the given views if present.
  static Standardizer load(const Checkpoint& checkpoint, std::span<const std::string> views);

 private:
  std::vector<ViewStats> stats_;
};

/// Views that standardization leaves alone.
bool is_categorical_view(std::string_view view);

}  // namespace deepmood
