// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepmood/events.hpp"
#include "deepmood/sessions.hpp"

namespace deepmood {

/// Generator settings. Every user gets `weeks` consecutive assessment weeks
/// and `sessions_per_user` sessions spread evenly over them. The mood class
/// is fixed per user-week; weeks come in pairs holding one class each (in
/// random order), so any chronological cut at a pair boundary is balanced.
///
/// Class signal, with t = +1 (positive) / -1 (negative) and a per-session
/// hidden sign u = +-1 independent of t:
///   log duration     ~ N(ln 85  + t * s * duration_shift, 0.365)
///   log interval     ~ N(ln 380 + t * s * interval_shift, 0.8), capped
///   dx               ~ N(u * s * key_offset, noise)
///   az               ~ N(8 + t * u * s * accel_shift, 1.5 * noise)
/// where s = class_signal. The accelerometer shift alone and the key offset
/// alone are independent of t; only their product is not, which is what the
/// multiplicative heads can pick up directly.
struct SynthConfig {
  std::size_t n_users = 20;
  std::size_t sessions_per_user = 200;
  std::size_t weeks = 10;
  double class_signal = 0.8;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  std::array<double, 3> mean_lengths = {24.0, 16.0, 378.0};
  double length_sigma = 0.4;
  double duration_shift = 0.08;
  double interval_shift = 0.08;
  double key_offset = 2.0;
  double accel_shift = 2.0;
  std::int64_t start_ms = 1451606400000;  // 2016-01-01T00:00:00Z

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Unknown keys and wrongly typed values raise ConfigError naming the key.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json synth_config_to_json(const SynthConfig& config);

struct GeneratedSession {
  std::string user_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::size_t week = 0;
  int mood_class = 0;  // 1 = depressed week (HDRS >= 8)
  int hidden_sign = 1;
  std::array<std::size_t, 3> lengths{};  // alph, spec, accel as emitted

  /// Survives filter_sessions: every view has at least 10 elements.
  bool survives_filter() const;
};

struct SynthOutput {
  std::vector<RawEvent> events;
  std::vector<LabelRecord> labels;
  std::vector<GeneratedSession> truth;

  std::size_t expected_sessions_after_filter() const;
};

SynthOutput generate(const SynthConfig& config);

/// Per-view length and count statistics of a raw log, segmented with `gap_ms`.
struct ViewSummary {
  std::string view;
  std::size_t events = 0;
  double mean_length = 0.0;
  double median_length = 0.0;
};

struct LogSummary {
  std::size_t users = 0;
  std::size_t events = 0;
  std::size_t sessions = 0;
  std::size_t accel_discarded = 0;
  std::array<ViewSummary, 3> views;
};

LogSummary describe(std::span<const RawEvent> events, std::int64_t gap_ms = kDefaultGapMs);
std::string format_summary(const LogSummary& summary);
nlohmann::json summary_to_json(const LogSummary& summary);

}  // namespace deepmood
