// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deepmood {

enum class EventKind { kAlphanumeric, kSpecial, kAccelerometer };

/// Special keys in one-hot order.
enum class SpecialKey {
  kAutoCorrect = 0,
  kBackspace = 1,
  kSpace = 2,
  kSuggestion = 3,
  kSwitchingKeyboard = 4,
  kOther = 5,
};
inline constexpr std::size_t kNumSpecialKeys = 6;

std::string_view kind_name(EventKind kind);
std::string_view special_key_name(SpecialKey key);
/// Unknown names return nullopt; callers map them to kOther.
std::optional<SpecialKey> parse_special_key(std::string_view name);

/// One metadata record of one view.
///
/// payload by kind:
///   alph   (duration_ms, time_since_last_ms, dx, dy)
///   spec   unused; the category is in `special`
///   accel  (ax, ay, az, unused)
struct RawEvent {
  std::string user_id;
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::kAlphanumeric;
  std::array<double, 4> payload{};
  SpecialKey special = SpecialKey::kOther;

  bool is_keypress() const { return kind != EventKind::kAccelerometer; }
};

struct LabelRecord {
  std::string user_id;
  std::int64_t assessment_ms = 0;
  int hdrs = 0;
  int ymrs = 0;
};

/// Event log text format, one record per line, comma separated:
///
///   user_id,timestamp_ms,kind,f1,f2,f3,f4
///   u01,1000,alph,85.0,380.0,1.5,-0.5     duration, since-last, dx, dy
///   u01,1400,spec,backspace,,,            category name in f1
///   u01,1010,accel,0.12,4.80,8.01,        ax, ay, az
///
/// The header line is required. Special-key names: auto-correct, backspace,
/// space, suggestion, switching-keyboard, other.
inline constexpr std::string_view kEventLogHeader = "user_id,timestamp_ms,kind,f1,f2,f3,f4";
/// Label file: user_id,assessment_timestamp_ms,hdrs,ymrs
inline constexpr std::string_view kLabelHeader = "user_id,assessment_timestamp_ms,hdrs,ymrs";

struct EventLog {
  std::vector<RawEvent> events;
  std::size_t unknown_special = 0;  // categories mapped to "other"
};

/// Throws DataError naming the line on a missing header, missing columns or
/// unparsable numbers.
EventLog read_event_log(std::istream& in);
std::vector<LabelRecord> read_labels(std::istream& in);

void write_event_log(std::ostream& out, std::span<const RawEvent> events);
void write_labels(std::ostream& out, std::span<const LabelRecord> labels);

}  // namespace deepmood
