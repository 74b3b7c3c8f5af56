// SPDX-License-Identifier: Apache-2.0
#include "deepmood/sessions.hpp"

#include <algorithm>
#include <map>

#include "deepmood/errors.hpp"

namespace deepmood {

namespace {

void add_keypress(Session& s, const RawEvent& e) {
  if (e.kind == EventKind::kAlphanumeric) {
    s.alph.push_back({e.timestamp_ms, e.payload[0], e.payload[1], e.payload[2], e.payload[3]});
  } else {
    s.special.push_back({e.timestamp_ms, e.special});
  }
}

}  // namespace

std::vector<Session> segment_sessions(std::span<const RawEvent> events, std::int64_t gap_ms,
                                      SegmentStats* stats) {
  if (gap_ms <= 0) throw ConfigError("segment_sessions: gap threshold must be positive");
  SegmentStats local;
  SegmentStats& st = stats != nullptr ? *stats : local;
  if (events.empty()) return {};

  const std::string& user = events.front().user_id;
  for (const auto& e : events) {
    if (e.user_id != user) {
      throw DataError("segment_sessions: events of users '" + user + "' and '" + e.user_id +
                      "' mixed; use segment_all_users");
    }
  }
  ++st.users;

  std::vector<RawEvent> sorted(events.begin(), events.end());
  const auto by_time = [](const RawEvent& a, const RawEvent& b) {
    return a.timestamp_ms < b.timestamp_ms;
  };
  if (!std::is_sorted(sorted.begin(), sorted.end(), by_time)) {
    std::stable_sort(sorted.begin(), sorted.end(), by_time);
    st.resorted = true;
  }

  std::vector<Session> sessions;
  std::vector<const RawEvent*> accel;
  const RawEvent* last_key = nullptr;
  for (const auto& e : sorted) {
    if (!e.is_keypress()) {
      accel.push_back(&e);
      continue;
    }
    ++st.keypresses;
    if (last_key == nullptr || e.timestamp_ms - last_key->timestamp_ms >= gap_ms) {
      Session s;
      s.user_id = user;
      s.start_ms = e.timestamp_ms;
      sessions.push_back(std::move(s));
    }
    Session& cur = sessions.back();
    cur.end_ms = e.timestamp_ms;
    add_keypress(cur, e);
    last_key = &e;
  }
  if (sessions.empty()) {
    if (!accel.empty()) ++st.accel_only_users;
    st.accel_discarded += accel.size();
    return sessions;
  }

  // Sessions are disjoint and ordered, so the candidate for a sample is the
  // last session starting at or before it.
  for (const RawEvent* a : accel) {
    const auto it = std::upper_bound(
        sessions.begin(), sessions.end(), a->timestamp_ms,
        [](std::int64_t t, const Session& s) { return t < s.start_ms; });
    if (it == sessions.begin() || a->timestamp_ms > std::prev(it)->end_ms) {
      ++st.accel_discarded;
      continue;
    }
    std::prev(it)->accel.push_back({a->timestamp_ms, a->payload[0], a->payload[1], a->payload[2]});
    ++st.accel_assigned;
  }
  return sessions;
}

std::vector<Session> segment_all_users(std::span<const RawEvent> events, std::int64_t gap_ms,
                                       SegmentStats* stats) {
  std::map<std::string, std::vector<RawEvent>> by_user;
  for (const auto& e : events) by_user[e.user_id].push_back(e);
  std::vector<Session> all;
  for (const auto& [user, user_events] : by_user) {
    auto sessions = segment_sessions(user_events, gap_ms, stats);
    std::move(sessions.begin(), sessions.end(), std::back_inserter(all));
  }
  return all;
}

std::vector<Session> filter_sessions(std::vector<Session> sessions, std::size_t max_len,
                                     std::size_t min_len) {
  std::vector<Session> kept;
  for (auto& s : sessions) {
    const auto lengths = s.view_lengths();
    if (std::any_of(lengths.begin(), lengths.end(), [&](std::size_t n) { return n < min_len; })) {
      continue;
    }
    if (s.alph.size() > max_len) s.alph.resize(max_len);
    if (s.special.size() > max_len) s.special.resize(max_len);
    if (s.accel.size() > max_len) s.accel.resize(max_len);
    kept.push_back(std::move(s));
  }
  return kept;
}

std::vector<Session> attach_labels(std::vector<Session> sessions,
                                   std::span<const LabelRecord> labels, LabelStats* stats) {
  std::map<std::string, std::vector<LabelRecord>> by_user;
  for (const auto& r : labels) by_user[r.user_id].push_back(r);
  for (auto& [user, records] : by_user) {
    std::sort(records.begin(), records.end(),
              [](const LabelRecord& a, const LabelRecord& b) { return a.assessment_ms < b.assessment_ms; });
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].assessment_ms - records[i - 1].assessment_ms < kWeekMs) {
        throw DataError("attach_labels: user '" + user + "' has assessments at " +
                        std::to_string(records[i - 1].assessment_ms) + " and " +
                        std::to_string(records[i].assessment_ms) +
                        " whose week windows overlap");
      }
    }
  }

  LabelStats local;
  LabelStats& st = stats != nullptr ? *stats : local;
  std::vector<Session> kept;
  for (auto& s : sessions) {
    const auto it = by_user.find(s.user_id);
    if (it != by_user.end()) {
      // first assessment strictly after the session start
      const auto& records = it->second;
      const auto next = std::upper_bound(
          records.begin(), records.end(), s.start_ms,
          [](std::int64_t t, const LabelRecord& r) { return t < r.assessment_ms; });
      if (next != records.end() && s.start_ms >= next->assessment_ms - kWeekMs) {
        s.label = MoodLabel{next->hdrs, next->ymrs};
        kept.push_back(std::move(s));
        ++st.labeled;
        continue;
      }
    }
    ++st.dropped;
  }
  return kept;
}

}  // namespace deepmood
