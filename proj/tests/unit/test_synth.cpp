// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "../common/reference.hpp"
#include "deepmood/errors.hpp"
#include "deepmood/events.hpp"
#include "deepmood/pipeline.hpp"
#include "deepmood/synth.hpp"

using namespace deepmood;

namespace {

SynthConfig small_config(double signal, std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_users = 4;
  c.sessions_per_user = 40;
  c.weeks = 4;
  c.class_signal = signal;
  c.seed = seed;
  return c;
}

std::string serialize(const SynthOutput& out) {
  std::ostringstream os;
  write_event_log(os, out.events);
  write_labels(os, out.labels);
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("fixed seed gives byte-identical files") {
  const std::string a = serialize(generate(small_config(0.8, 5)));
  const std::string b = serialize(generate(small_config(0.8, 5)));
  CHECK(a == b);
  CHECK(a != serialize(generate(small_config(0.8, 6))));
}

TEST_CASE("keypress timing medians sit near their targets") {
  SynthConfig c = small_config(0.0);
  c.n_users = 6;
  c.sessions_per_user = 80;
  const SynthOutput out = generate(c);
  std::vector<double> interval, duration;
  for (const auto& e : out.events) {
    if (e.kind != EventKind::kAlphanumeric) continue;
    duration.push_back(e.payload[0]);
    interval.push_back(e.payload[1]);
  }
  REQUIRE(interval.size() >= 10000);
  interval.resize(10000);
  CHECK(std::abs(median(interval) / 380.0 - 1.0) <= 0.2);
  CHECK(std::abs(median(duration) / 85.0 - 1.0) <= 0.2);
}

TEST_CASE("generated data passes the pipeline without format errors") {
  const SynthOutput out = generate(small_config(0.8));
  std::stringstream ev, lb;
  write_event_log(ev, out.events);
  write_labels(lb, out.labels);
  const EventLog log = read_event_log(ev);
  const auto labels = read_labels(lb);
  CHECK(log.unknown_special == 0);
  IngestReport rep;
  const auto sessions = ingest(log.events, labels, {}, &rep);
  CHECK(sessions.size() == out.expected_sessions_after_filter());
  CHECK(rep.segmented == out.truth.size());
  CHECK(rep.labels.dropped == 0);
  for (const auto& s : sessions)
    for (const auto& v : s.views) {
      CHECK(v.rows() >= 10);
      CHECK(v.rows() <= 100);
    }
  // labels agree with the generator's classes
  std::size_t i = 0;
  for (const auto& g : out.truth) {
    if (!g.survives_filter()) continue;
    REQUIRE(i < sessions.size());
    CHECK(sessions[i].start_ms == g.start_ms);
    CHECK((sessions[i].hdrs >= 8 ? 1 : 0) == g.mood_class);
    ++i;
  }
}

TEST_CASE("raw view lengths follow the configured means") {
  SynthConfig c = small_config(0.5);
  c.n_users = 6;
  c.sessions_per_user = 100;
  c.weeks = 5;
  const SynthOutput out = generate(c);
  std::array<double, 3> mean{};
  for (const auto& g : out.truth)
    for (std::size_t v = 0; v < 3; ++v) mean[v] += static_cast<double>(g.lengths[v]) / out.truth.size();
  CHECK(mean[0] == doctest::Approx(24.0).epsilon(0.1));
  CHECK(mean[1] == doctest::Approx(16.0).epsilon(0.1));
  CHECK(mean[2] == doctest::Approx(378.0).epsilon(0.1));
}

TEST_CASE("the injected product separates classes at full signal") {
  SynthConfig c = small_config(1.0);
  c.noise_scale = 0.2;
  const SynthOutput out = generate(c);
  IngestOptions opts;
  opts.features.log_transform = false;
  const auto sessions = ingest(out.events, out.labels, opts);
  REQUIRE(!sessions.empty());
  std::size_t correct = 0;
  for (const auto& s : sessions) {
    double dx = 0, az = 0;
    for (std::size_t t = 0; t < s.views[0].rows(); ++t) dx += s.views[0](t, 2) / s.views[0].rows();
    for (std::size_t t = 0; t < s.views[2].rows(); ++t) az += s.views[2](t, 2) / s.views[2].rows();
    const int predicted = dx * (az - 8.0) > 0 ? 1 : 0;
    correct += predicted == (s.hdrs >= 8 ? 1 : 0);
  }
  CHECK(static_cast<double>(correct) / sessions.size() >= 0.99);
}

TEST_CASE("without signal the features do not depend on the class") {
  const SynthOutput out = generate(small_config(0.0));
  const auto sessions = ingest(out.events, out.labels);
  double prod[2] = {0, 0}, dur[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (const auto& s : sessions) {
    const int y = s.hdrs >= 8 ? 1 : 0;
    double dx = 0, az = 0, d = 0;
    for (std::size_t t = 0; t < s.views[0].rows(); ++t) {
      dx += s.views[0](t, 2) / s.views[0].rows();
      d += s.views[0](t, 0) / s.views[0].rows();
    }
    for (std::size_t t = 0; t < s.views[2].rows(); ++t) az += s.views[2](t, 2) / s.views[2].rows();
    prod[y] += dx * (az - 8.0);
    dur[y] += d;
    ++n[y];
  }
  REQUIRE(n[0] > 20);
  REQUIRE(n[1] > 20);
  CHECK(std::abs(prod[1] / n[1] - prod[0] / n[0]) < 0.1);
  CHECK(std::abs(dur[1] / n[1] - dur[0] / n[0]) < 0.05);
}

TEST_CASE("classes are balanced and labels are weekly") {
  const SynthOutput out = generate(small_config(0.8));
  CHECK(out.labels.size() == 4 * 4);
  std::size_t pos = 0;
  for (const auto& g : out.truth) pos += static_cast<std::size_t>(g.mood_class);
  CHECK(static_cast<double>(pos) / out.truth.size() == doctest::Approx(0.5).epsilon(0.1));
  for (const auto& l : out.labels) {
    CHECK(l.hdrs >= 0);
    CHECK(l.ymrs >= 0);
  }
}

TEST_CASE("synth config parsing") {
  const auto c = synth_config_from_json(nlohmann::json{{"n_users", 3}, {"class_signal", 0.25}, {"seed", 9}});
  CHECK(c.n_users == 3);
  CHECK(c.class_signal == 0.25);
  CHECK(c.seed == 9);
  CHECK(synth_config_from_json(synth_config_to_json(c)).class_signal == 0.25);
  CHECK_THROWS_WITH_AS(synth_config_from_json(nlohmann::json{{"n_user", 3}}), doctest::Contains("n_user"), ConfigError);
  CHECK_THROWS_WITH_AS(synth_config_from_json(nlohmann::json{{"seed", "x"}}), doctest::Contains("seed"), ConfigError);
  CHECK_THROWS_AS(synth_config_from_json(nlohmann::json{{"class_signal", 1.5}}), ConfigError);
  // too many sessions to fit into the weeks
  CHECK_THROWS_AS(synth_config_from_json(nlohmann::json{{"sessions_per_user", 5000}, {"weeks", 2}}), ConfigError);
}

TEST_CASE("describe an empty log") {
  const LogSummary s = describe({});
  CHECK(s.users == 0);
  CHECK(s.events == 0);
  CHECK(s.sessions == 0);
  for (const auto& v : s.views) {
    CHECK(v.events == 0);
    CHECK(v.mean_length == 0.0);
  }
}

TEST_CASE("describe a hand-built two-session log") {
  std::vector<RawEvent> ev;
  const auto push = [&](std::int64_t t, EventKind k) {
    RawEvent e;
    e.user_id = "u";
    e.timestamp_ms = t;
    e.kind = k;
    ev.push_back(e);
  };
  push(0, EventKind::kAlphanumeric);
  push(100, EventKind::kSpecial);
  push(150, EventKind::kAccelerometer);
  push(200, EventKind::kAlphanumeric);
  push(9000, EventKind::kAlphanumeric);
  push(9000, EventKind::kAccelerometer);
  push(9500, EventKind::kAccelerometer);
  const LogSummary s = describe(ev);
  CHECK(s.users == 1);
  CHECK(s.events == 7);
  CHECK(s.sessions == 2);
  CHECK(s.accel_discarded == 1);
  CHECK(s.views[0].events == 3);
  CHECK(s.views[0].mean_length == 1.5);
  CHECK(s.views[1].mean_length == 0.5);
  CHECK(s.views[2].mean_length == 1.0);
  CHECK(s.views[2].median_length == 1.0);
  CHECK(summary_to_json(s)["sessions"] == 2);
  CHECK(format_summary(s).find("sessions  2") != std::string::npos);
}

TEST_CASE("describe agrees with an independent scan") {
  Rng rng(4);
  std::vector<RawEvent> ev;
  for (int u = 0; u < 3; ++u) {
    auto part = reference::random_stream(rng, 300, "user" + std::to_string(u));
    ev.insert(ev.end(), part.begin(), part.end());
  }
  const LogSummary s = describe(ev);
  std::size_t sessions = 0;
  double alph = 0;
  for (int u = 0; u < 3; ++u) {
    std::vector<RawEvent> mine;
    for (const auto& e : ev)
      if (e.user_id == "user" + std::to_string(u)) mine.push_back(e);
    for (const auto& r : reference::segment(mine, 5000)) {
      ++sessions;
      alph += r.alph;
    }
  }
  CHECK(s.users == 3);
  CHECK(s.sessions == sessions);
  CHECK(s.views[0].mean_length == doctest::Approx(alph / sessions).epsilon(1e-12));
}
