// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepmood/events.hpp"
#include "deepmood/features.hpp"
#include "deepmood/sessions.hpp"
#include "deepmood/training.hpp"

namespace deepmood {

struct IngestOptions {
  std::int64_t gap_ms = kDefaultGapMs;
  std::size_t max_len = kMaxSequenceLength;
  std::size_t min_len = kMinSequenceLength;
  FeatureOptions features;
};

struct IngestReport {
  SegmentStats segment;
  std::size_t segmented = 0;
  std::size_t after_filter = 0;
  LabelStats labels;
};

/// segment -> filter -> attach labels -> featurize.
std::vector<FeaturizedSession> ingest(std::span<const RawEvent> events,
                                      std::span<const LabelRecord> labels,
                                      const IngestOptions& options = {},
                                      IngestReport* report = nullptr);

/// Temporal split plus standardization fitted on the train part only, or
/// taken from `fixed` (e.g. restored from a checkpoint) when given.
struct PreparedData {
  SplitIndices split;
  Standardizer standardizer;
  Dataset train;
  Dataset val;
};

PreparedData prepare(std::span<const FeaturizedSession> sessions, double train_ratio = 0.8,
                     const Standardizer* fixed = nullptr);

}  // namespace deepmood
