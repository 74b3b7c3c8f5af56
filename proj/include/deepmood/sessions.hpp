// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepmood/events.hpp"

namespace deepmood {

struct AlphKey {
  std::int64_t timestamp_ms = 0;
  double duration_ms = 0.0;
  double since_last_ms = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

struct SpecialPress {
  std::int64_t timestamp_ms = 0;
  SpecialKey key = SpecialKey::kOther;
};

struct AccelSample {
  std::int64_t timestamp_ms = 0;
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;
};

struct MoodLabel {
  int hdrs = 0;
  int ymrs = 0;
};

/// One typing session: the keypresses between two >= gap pauses plus the
/// accelerometer samples recorded inside [start_ms, end_ms].
struct Session {
  std::string user_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::vector<AlphKey> alph;
  std::vector<SpecialPress> special;
  std::vector<AccelSample> accel;
  std::optional<MoodLabel> label;

  /// (alph, spec, accel) sequence lengths.
  std::array<std::size_t, 3> view_lengths() const {
    return {alph.size(), special.size(), accel.size()};
  }
};

inline constexpr std::int64_t kDefaultGapMs = 5000;
inline constexpr std::size_t kMaxSequenceLength = 100;
inline constexpr std::size_t kMinSequenceLength = 10;
inline constexpr std::int64_t kWeekMs = 7LL * 24 * 3600 * 1000;

struct SegmentStats {
  std::size_t users = 0;
  std::size_t keypresses = 0;
  std::size_t accel_assigned = 0;
  std::size_t accel_discarded = 0;
  /// Users whose stream had accelerometer data but no keypress.
  std::size_t accel_only_users = 0;
  /// Input was not in timestamp order and had to be sorted.
  bool resorted = false;
};

/// Segments one user's events. A pause of at least `gap_ms` between
/// consecutive keypresses (alphanumeric or special) closes a session.
/// Accelerometer samples outside every session span are discarded. Events
/// are stably sorted by timestamp first if they are not already.
std::vector<Session> segment_sessions(std::span<const RawEvent> events,
                                      std::int64_t gap_ms = kDefaultGapMs,
                                      SegmentStats* stats = nullptr);

/// Groups events by user (sorted user ids) and segments each user.
std::vector<Session> segment_all_users(std::span<const RawEvent> events,
                                       std::int64_t gap_ms = kDefaultGapMs,
                                       SegmentStats* stats = nullptr);

/// Truncates every view to its first `max_len` elements and drops sessions in
/// which any view has fewer than `min_len` elements.
std::vector<Session> filter_sessions(std::vector<Session> sessions,
                                     std::size_t max_len = kMaxSequenceLength,
                                     std::size_t min_len = kMinSequenceLength);

struct LabelStats {
  std::size_t labeled = 0;
  std::size_t dropped = 0;
};

/// Gives each session the scores of the assessment whose week window
/// [assessment - 7 days, assessment) contains the session start. Sessions
/// outside every window are dropped. Throws DataError when two assessments
/// of one user are less than a week apart.
std::vector<Session> attach_labels(std::vector<Session> sessions,
                                   std::span<const LabelRecord> labels,
                                   LabelStats* stats = nullptr);

}  // namespace deepmood
