// SPDX-License-Identifier: Apache-2.0
#include "deepmood/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "deepmood/errors.hpp"
#include "deepmood/rng.hpp"

namespace deepmood {

namespace {

constexpr double kDurationMedianMs = 85.0;
constexpr double kDurationSigma = 0.365;  // puts the 95th percentile near 155 ms
constexpr double kIntervalMedianMs = 380.0;
constexpr double kIntervalSigma = 0.8;
// Stay under the 5 s session gap so one generated session is one segmented session.
constexpr std::int64_t kMaxIntervalMs = 4500;
constexpr std::size_t kMaxKeypressLength = 400;
constexpr std::size_t kMaxAccelLength = 2000;
constexpr double kAccelMeans[3] = {0.1, 4.8, 8.0};
constexpr double kAccelNoise = 1.5;
// auto-correct, backspace, space, suggestion, switching-keyboard, other
constexpr double kSpecialWeights[kNumSpecialKeys] = {0.08, 0.3, 0.42, 0.1, 0.05, 0.05};
// Starts jitter by a quarter slot, so a slot must hold two of the longest sessions.
constexpr std::int64_t kSlotMarginMs =
    2 * (2 * static_cast<std::int64_t>(kMaxKeypressLength) * kMaxIntervalMs + kDefaultGapMs);

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::size_t draw_length(Rng& rng, double mean, double sigma, std::size_t cap) {
  // lognormal with the requested mean: median = mean * exp(-sigma^2 / 2)
  const double v = rng.lognormal(std::log(mean) - 0.5 * sigma * sigma, sigma);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), 1, cap);
}

SpecialKey draw_special(Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < kNumSpecialKeys; ++i) {
    if (u < kSpecialWeights[i]) return static_cast<SpecialKey>(i);
    u -= kSpecialWeights[i];
  }
  return SpecialKey::kOther;
}

std::string user_name(std::size_t index, std::size_t n_users) {
  int width = 2;
  for (std::size_t n = n_users; n >= 100; n /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u%0*zu", width, index + 1);
  return buf;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& expectation) {
  throw ConfigError("synth config: key '" + key + "' " + expectation);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users == 0) bad_key("n_users", "must be >= 1");
  if (weeks == 0) bad_key("weeks", "must be >= 1");
  if (sessions_per_user < weeks) bad_key("sessions_per_user", "must be >= weeks");
  if (!(class_signal >= 0.0 && class_signal <= 1.0)) bad_key("class_signal", "must be in [0, 1]");
  if (!(noise_scale > 0.0)) bad_key("noise_scale", "must be > 0");
  if (!(length_sigma >= 0.0 && length_sigma <= 2.0)) bad_key("length_sigma", "must be in [0, 2]");
  const std::size_t caps[3] = {kMaxKeypressLength, kMaxKeypressLength, kMaxAccelLength};
  for (std::size_t v = 0; v < 3; ++v) {
    if (!(mean_lengths[v] >= 1.0 && mean_lengths[v] <= static_cast<double>(caps[v]))) {
      bad_key("mean_lengths", "entry " + std::to_string(v) + " must be in [1, " +
                                  std::to_string(caps[v]) + "]");
    }
  }
  // Each session needs a slot long enough that it cannot run into the next.
  const std::size_t per_week = (sessions_per_user + weeks - 1) / weeks;
  if (static_cast<std::int64_t>(per_week + 1) * kSlotMarginMs > kWeekMs) {
    bad_key("sessions_per_user", "is infeasible: at most " +
                                     std::to_string(kWeekMs / kSlotMarginMs - 1) +
                                     " sessions fit in one week");
  }
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth config: top level must be a JSON object");
  SynthConfig c;
  for (const auto& [key, value] : j.items()) {
    const auto as_count = [&]() -> std::size_t {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        bad_key(key, "must be a non-negative integer");
      }
      return value.get<std::size_t>();
    };
    const auto as_real = [&]() -> double {
      if (!value.is_number()) bad_key(key, "must be a number");
      return value.get<double>();
    };
    if (key == "n_users") {
      c.n_users = as_count();
    } else if (key == "sessions_per_user") {
      c.sessions_per_user = as_count();
    } else if (key == "weeks") {
      c.weeks = as_count();
    } else if (key == "class_signal") {
      c.class_signal = as_real();
    } else if (key == "noise_scale") {
      c.noise_scale = as_real();
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        bad_key(key, "must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "mean_lengths") {
      if (!value.is_array() || value.size() != 3) bad_key(key, "must be an array of 3 numbers");
      for (std::size_t v = 0; v < 3; ++v) {
        if (!value[v].is_number()) bad_key(key, "must be an array of 3 numbers");
        c.mean_lengths[v] = value[v].get<double>();
      }
    } else if (key == "length_sigma") {
      c.length_sigma = as_real();
    } else if (key == "duration_shift") {
      c.duration_shift = as_real();
    } else if (key == "interval_shift") {
      c.interval_shift = as_real();
    } else if (key == "key_offset") {
      c.key_offset = as_real();
    } else if (key == "accel_shift") {
      c.accel_shift = as_real();
    } else if (key == "start_ms") {
      if (!value.is_number_integer()) bad_key(key, "must be an integer");
      c.start_ms = value.get<std::int64_t>();
    } else {
      bad_key(key, "is not a known setting");
    }
  }
  c.validate();
  return c;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {
      {"n_users", c.n_users},
      {"sessions_per_user", c.sessions_per_user},
      {"weeks", c.weeks},
      {"class_signal", c.class_signal},
      {"noise_scale", c.noise_scale},
      {"seed", c.seed},
      {"mean_lengths", c.mean_lengths},
      {"length_sigma", c.length_sigma},
      {"duration_shift", c.duration_shift},
      {"interval_shift", c.interval_shift},
      {"key_offset", c.key_offset},
      {"accel_shift", c.accel_shift},
      {"start_ms", c.start_ms},
  };
}

bool GeneratedSession::survives_filter() const {
  return std::all_of(lengths.begin(), lengths.end(),
                     [](std::size_t n) { return n >= kMinSequenceLength; });
}

std::size_t SynthOutput::expected_sessions_after_filter() const {
  return static_cast<std::size_t>(
      std::count_if(truth.begin(), truth.end(), [](const auto& s) { return s.survives_filter(); }));
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  SynthOutput out;
  Rng root(config.seed);
  const double s = config.class_signal;
  const double noise = config.noise_scale;

  for (std::size_t user = 0; user < config.n_users; ++user) {
    Rng rng = root.fork(user);
    const std::string uid = user_name(user, config.n_users);

    // pairs of weeks, one of each class, random order within the pair
    std::vector<int> week_class(config.weeks);
    for (std::size_t w = 0; w + 1 < config.weeks; w += 2) {
      const bool first_pos = rng.bernoulli(0.5);
      week_class[w] = first_pos ? 1 : 0;
      week_class[w + 1] = first_pos ? 0 : 1;
    }
    if (config.weeks % 2 == 1) week_class.back() = rng.bernoulli(0.5) ? 1 : 0;

    for (std::size_t w = 0; w < config.weeks; ++w) {
      const int cls = week_class[w];
      LabelRecord label;
      label.user_id = uid;
      label.assessment_ms = config.start_ms + static_cast<std::int64_t>(w + 1) * kWeekMs;
      label.hdrs = cls == 1 ? 8 + static_cast<int>(rng.uniform_index(17))
                            : static_cast<int>(rng.uniform_index(8));
      label.ymrs = std::max(0, static_cast<int>(std::lround(rng.normal(cls == 1 ? 9.0 : 3.0, 2.0))));
      out.labels.push_back(label);
    }

    std::vector<RawEvent> user_events;
    std::vector<std::size_t> per_week(config.weeks, 0);
    for (std::size_t i = 0; i < config.sessions_per_user; ++i) ++per_week[i * config.weeks / config.sessions_per_user];

    for (std::size_t w = 0; w < config.weeks; ++w) {
      const std::int64_t week_start = config.start_ms + static_cast<std::int64_t>(w) * kWeekMs;
      const std::int64_t spacing = kWeekMs / static_cast<std::int64_t>(per_week[w] + 1);
      const double t = week_class[w] == 1 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < per_week[w]; ++j) {
        GeneratedSession gs;
        gs.user_id = uid;
        gs.week = w;
        gs.mood_class = week_class[w];
        gs.hidden_sign = rng.bernoulli(0.5) ? 1 : -1;
        const double u = gs.hidden_sign;
        const auto jitter = static_cast<std::int64_t>(
            std::llround(rng.uniform(-0.25, 0.25) * static_cast<double>(spacing)));
        gs.start_ms = week_start + static_cast<std::int64_t>(j + 1) * spacing + jitter;

        const std::size_t n_alph = draw_length(rng, config.mean_lengths[0], config.length_sigma, kMaxKeypressLength);
        const std::size_t n_spec = draw_length(rng, config.mean_lengths[1], config.length_sigma, kMaxKeypressLength);
        const std::size_t n_accel = draw_length(rng, config.mean_lengths[2], config.length_sigma, kMaxAccelLength);
        std::vector<bool> is_alph(n_alph + n_spec, false);
        std::fill(is_alph.begin(), is_alph.begin() + static_cast<std::ptrdiff_t>(n_alph), true);
        for (std::size_t a = is_alph.size(); a > 1; --a) {
          const auto b = static_cast<std::size_t>(rng.uniform_index(a));
          const bool tmp = is_alph[a - 1];
          is_alph[a - 1] = is_alph[b];
          is_alph[b] = tmp;
        }

        std::int64_t ts = gs.start_ms;
        for (std::size_t k = 0; k < is_alph.size(); ++k) {
          const double drawn = rng.lognormal(std::log(kIntervalMedianMs) + t * s * config.interval_shift,
                                             kIntervalSigma);
          const std::int64_t interval = std::clamp<std::int64_t>(std::llround(drawn), 1, kMaxIntervalMs);
          if (k > 0) ts += interval;
          RawEvent e;
          e.user_id = uid;
          e.timestamp_ms = ts;
          if (is_alph[k]) {
            e.kind = EventKind::kAlphanumeric;
            e.payload[0] = round3(rng.lognormal(std::log(kDurationMedianMs) + t * s * config.duration_shift,
                                                kDurationSigma));
            e.payload[1] = static_cast<double>(interval);
            e.payload[2] = round3(rng.normal(u * s * config.key_offset, noise));
            e.payload[3] = round3(rng.normal(0.0, noise));
          } else {
            e.kind = EventKind::kSpecial;
            e.special = draw_special(rng);
          }
          user_events.push_back(std::move(e));
        }
        gs.end_ms = ts;

        const std::int64_t span = gs.end_ms - gs.start_ms;
        for (std::size_t k = 0; k < n_accel; ++k) {
          RawEvent e;
          e.user_id = uid;
          e.kind = EventKind::kAccelerometer;
          e.timestamp_ms = n_accel == 1 ? gs.start_ms
                                        : gs.start_ms + span * static_cast<std::int64_t>(k) /
                                                            static_cast<std::int64_t>(n_accel - 1);
          e.payload[0] = round3(rng.normal(kAccelMeans[0], kAccelNoise * noise));
          e.payload[1] = round3(rng.normal(kAccelMeans[1], kAccelNoise * noise));
          e.payload[2] = round3(rng.normal(kAccelMeans[2] + t * u * s * config.accel_shift, kAccelNoise * noise));
          user_events.push_back(std::move(e));
        }
        gs.lengths = {n_alph, n_spec, n_accel};
        out.truth.push_back(std::move(gs));
      }
    }
    std::stable_sort(user_events.begin(), user_events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timestamp_ms < b.timestamp_ms; });
    std::move(user_events.begin(), user_events.end(), std::back_inserter(out.events));
  }
  return out;
}

LogSummary describe(std::span<const RawEvent> events, std::int64_t gap_ms) {
  LogSummary summary;
  summary.events = events.size();
  for (std::size_t v = 0; v < 3; ++v) summary.views[v].view = std::string(kind_name(static_cast<EventKind>(v)));
  std::map<std::string, int> users;
  for (const auto& e : events) {
    users[e.user_id] = 1;
    ++summary.views[static_cast<std::size_t>(e.kind)].events;
  }
  summary.users = users.size();

  SegmentStats stats;
  const auto sessions = segment_all_users(events, gap_ms, &stats);
  summary.sessions = sessions.size();
  summary.accel_discarded = stats.accel_discarded;
  if (sessions.empty()) return summary;
  for (std::size_t v = 0; v < 3; ++v) {
    std::vector<std::size_t> lengths;
    lengths.reserve(sessions.size());
    for (const auto& s : sessions) lengths.push_back(s.view_lengths()[v]);
    double total = 0.0;
    for (std::size_t n : lengths) total += static_cast<double>(n);
    summary.views[v].mean_length = total / static_cast<double>(lengths.size());
    std::sort(lengths.begin(), lengths.end());
    const std::size_t mid = lengths.size() / 2;
    summary.views[v].median_length =
        lengths.size() % 2 == 1 ? static_cast<double>(lengths[mid])
                                : 0.5 * static_cast<double>(lengths[mid - 1] + lengths[mid]);
  }
  return summary;
}

std::string format_summary(const LogSummary& summary) {
  std::ostringstream os;
  os << "users     " << summary.users << '\n'
     << "events    " << summary.events << '\n'
     << "sessions  " << summary.sessions << '\n'
     << "accel samples outside sessions  " << summary.accel_discarded << '\n'
     << "\nview   events      mean length  median length\n";
  for (const auto& v : summary.views) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-6s %-11zu %-12.2f %.1f\n", v.view.c_str(), v.events,
                  v.mean_length, v.median_length);
    os << line;
  }
  return os.str();
}

nlohmann::json summary_to_json(const LogSummary& summary) {
  nlohmann::json views = nlohmann::json::object();
  for (const auto& v : summary.views) {
    views[v.view] = {{"events", v.events}, {"mean_length", v.mean_length}, {"median_length", v.median_length}};
  }
  return {{"users", summary.users},
          {"events", summary.events},
          {"sessions", summary.sessions},
          {"accel_discarded", summary.accel_discarded},
          {"views", views}};
}

}  // namespace deepmood
