// SPDX-License-Identifier: Apache-2.0
#include "deepmood/events.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "deepmood/errors.hpp"

namespace deepmood {

namespace {

constexpr std::array<std::string_view, kNumSpecialKeys> kSpecialNames = {
    "auto-correct", "backspace", "space", "suggestion", "switching-keyboard", "other"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw DataError("line " + std::to_string(line_no) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* column) {
  field = trim(field);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(line_no, std::string("bad ") + column + " value '" + std::string(field) + "'");
  }
  return value;
}

void check_header(std::istream& in, std::string_view expected, const char* what) {
  std::string header;
  if (!std::getline(in, header)) throw DataError(std::string(what) + ": empty file, header required");
  if (trim(header) != expected) {
    throw DataError(std::string(what) + ": header must be '" + std::string(expected) + "', got '" +
                    std::string(trim(header)) + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kAlphanumeric: return "alph";
    case EventKind::kSpecial: return "spec";
    case EventKind::kAccelerometer: return "accel";
  }
  return "?";
}

std::string_view special_key_name(SpecialKey key) {
  return kSpecialNames[static_cast<std::size_t>(key)];
}

std::optional<SpecialKey> parse_special_key(std::string_view name) {
  for (std::size_t i = 0; i < kSpecialNames.size(); ++i)
    if (kSpecialNames[i] == name) return static_cast<SpecialKey>(i);
  return std::nullopt;
}

EventLog read_event_log(std::istream& in) {
  check_header(in, kEventLogHeader, "event log");
  EventLog log;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    if (f.size() != 7) {
      fail(line_no, "expected 7 columns (" + std::string(kEventLogHeader) + "), got " +
                        std::to_string(f.size()));
    }
    RawEvent e;
    e.user_id = std::string(trim(f[0]));
    if (e.user_id.empty()) fail(line_no, "empty user_id");
    e.timestamp_ms = parse_number<std::int64_t>(f[1], line_no, "timestamp_ms");
    const auto kind = trim(f[2]);
    if (kind == "alph") {
      e.kind = EventKind::kAlphanumeric;
      for (std::size_t i = 0; i < 4; ++i) e.payload[i] = parse_number<double>(f[3 + i], line_no, "alph feature");
    } else if (kind == "spec") {
      e.kind = EventKind::kSpecial;
      const auto key = parse_special_key(trim(f[3]));
      if (!key) ++log.unknown_special;
      e.special = key.value_or(SpecialKey::kOther);
    } else if (kind == "accel") {
      e.kind = EventKind::kAccelerometer;
      for (std::size_t i = 0; i < 3; ++i) e.payload[i] = parse_number<double>(f[3 + i], line_no, "accel feature");
    } else {
      fail(line_no, "unknown kind '" + std::string(kind) + "' (expected alph, spec or accel)");
    }
    log.events.push_back(std::move(e));
  }
  return log;
}

std::vector<LabelRecord> read_labels(std::istream& in) {
  check_header(in, kLabelHeader, "label file");
  std::vector<LabelRecord> labels;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    if (f.size() != 4) {
      fail(line_no, "expected 4 columns (" + std::string(kLabelHeader) + "), got " +
                        std::to_string(f.size()));
    }
    LabelRecord r;
    r.user_id = std::string(trim(f[0]));
    if (r.user_id.empty()) fail(line_no, "empty user_id");
    r.assessment_ms = parse_number<std::int64_t>(f[1], line_no, "assessment_timestamp_ms");
    r.hdrs = parse_number<int>(f[2], line_no, "hdrs");
    r.ymrs = parse_number<int>(f[3], line_no, "ymrs");
    if (r.hdrs < 0 || r.ymrs < 0) fail(line_no, "scores must be >= 0");
    labels.push_back(std::move(r));
  }
  return labels;
}

void write_event_log(std::ostream& out, std::span<const RawEvent> events) {
  out << kEventLogHeader << '\n';
  for (const auto& e : events) {
    out << e.user_id << ',' << e.timestamp_ms << ',' << kind_name(e.kind) << ',';
    switch (e.kind) {
      case EventKind::kAlphanumeric:
        out << format_double(e.payload[0]) << ',' << format_double(e.payload[1]) << ','
            << format_double(e.payload[2]) << ',' << format_double(e.payload[3]);
        break;
      case EventKind::kSpecial:
        out << special_key_name(e.special) << ",,,";
        break;
      case EventKind::kAccelerometer:
        out << format_double(e.payload[0]) << ',' << format_double(e.payload[1]) << ','
            << format_double(e.payload[2]) << ',';
        break;
    }
    out << '\n';
  }
}

void write_labels(std::ostream& out, std::span<const LabelRecord> labels) {
  out << kLabelHeader << '\n';
  for (const auto& r : labels) {
    out << r.user_id << ',' << r.assessment_ms << ',' << r.hdrs << ',' << r.ymrs << '\n';
  }
}

}  // namespace deepmood
