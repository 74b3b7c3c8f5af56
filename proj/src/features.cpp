// SPDX-License-Identifier: Apache-2.0
#include "deepmood/features.hpp"

#include <cmath>

#include "deepmood/errors.hpp"

namespace deepmood {

namespace {

constexpr double kMinStd = 1e-12;

double log_feature(double ms, const char* what) {
  if (!(ms > -1.0)) {
    throw DataError(std::string("featurize: ") + what + " of " + std::to_string(ms) +
                    " ms cannot be log-transformed");
  }
  return std::log1p(ms);
}

}  // namespace

bool is_categorical_view(std::string_view view) { return view == "spec"; }

FeaturizedSession featurize(const Session& session, const FeatureOptions& options) {
  if (!session.label) {
    throw DataError("featurize: session of user '" + session.user_id + "' at " +
                    std::to_string(session.start_ms) + " has no label");
  }
  FeaturizedSession out;
  out.user_id = session.user_id;
  out.start_ms = session.start_ms;
  out.end_ms = session.end_ms;
  out.hdrs = session.label->hdrs;
  out.ymrs = session.label->ymrs;

  Matrix alph(session.alph.size(), kViewDims[0]);
  for (std::size_t i = 0; i < session.alph.size(); ++i) {
    const auto& k = session.alph[i];
    alph(i, 0) = options.log_transform ? log_feature(k.duration_ms, "duration") : k.duration_ms;
    alph(i, 1) = options.log_transform ? log_feature(k.since_last_ms, "time since last key")
                                       : k.since_last_ms;
    alph(i, 2) = k.dx;
    alph(i, 3) = k.dy;
  }
  Matrix spec(session.special.size(), kViewDims[1]);
  for (std::size_t i = 0; i < session.special.size(); ++i) {
    spec(i, static_cast<std::size_t>(session.special[i].key)) = 1.0;
  }
  Matrix accel(session.accel.size(), kViewDims[2]);
  for (std::size_t i = 0; i < session.accel.size(); ++i) {
    accel(i, 0) = session.accel[i].ax;
    accel(i, 1) = session.accel[i].ay;
    accel(i, 2) = session.accel[i].az;
  }
  out.views = {std::move(alph), std::move(spec), std::move(accel)};
  return out;
}

std::vector<SessionKey> session_keys(std::span<const FeaturizedSession> sessions) {
  std::vector<SessionKey> keys;
  keys.reserve(sessions.size());
  for (const auto& s : sessions) keys.push_back({s.user_id, s.start_ms, s.end_ms});
  return keys;
}

Dataset make_dataset(std::span<const FeaturizedSession> sessions) {
  Dataset data;
  data.view_names.assign(kViewNames.begin(), kViewNames.end());
  data.views.resize(kNumViews);
  for (const auto& s : sessions) {
    for (std::size_t v = 0; v < kNumViews; ++v) data.views[v].push_back(s.views[v]);
    data.labels.push_back(dichotomize_hdrs(s.hdrs));
    data.targets.push_back(static_cast<double>(s.ymrs));
  }
  return data;
}

Standardizer Standardizer::fit(const Dataset& train) {
  Standardizer st;
  for (std::size_t v = 0; v < train.views.size(); ++v) {
    if (is_categorical_view(train.view_names[v])) continue;
    const auto& seqs = train.views[v];
    if (seqs.empty()) throw DataError("standardizer: no samples to fit");
    const std::size_t d = seqs.front().cols();
    ViewStats s{train.view_names[v], Matrix(1, d), Matrix(1, d)};
    std::size_t n = 0;
    for (const auto& m : seqs) {
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean(0, j) += m(i, j);
      n += m.rows();
    }
    if (n == 0) throw DataError("standardizer: view '" + s.view + "' has no timesteps");
    for (std::size_t j = 0; j < d; ++j) s.mean(0, j) /= static_cast<double>(n);
    // second pass for the variance, numerically kinder than sum of squares
    for (const auto& m : seqs) {
      for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const double c = m(i, j) - s.mean(0, j);
          s.std(0, j) += c * c;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(s.std(0, j) / static_cast<double>(n));
      s.std(0, j) = sd < kMinStd ? 1.0 : sd;
    }
    st.stats_.push_back(std::move(s));
  }
  return st;
}

void Standardizer::apply(Dataset& data) const {
  for (const auto& s : stats_) {
    std::size_t v = 0;
    while (v < data.view_names.size() && data.view_names[v] != s.view) ++v;
    if (v == data.view_names.size()) continue;
    for (auto& m : data.views[v]) {
      if (m.cols() != s.mean.cols()) {
        throw ShapeError("standardizer: view '" + s.view + "' has " + std::to_string(m.cols()) +
                         " columns, stats have " + std::to_string(s.mean.cols()));
      }
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = (m(i, j) - s.mean(0, j)) / s.std(0, j);
    }
  }
}

void Standardizer::store(Checkpoint& checkpoint) const {
  for (const auto& s : stats_) {
    checkpoint.arrays.push_back({"norm/" + s.view + "/mean", s.mean});
    checkpoint.arrays.push_back({"norm/" + s.view + "/std", s.std});
  }
}

Standardizer Standardizer::load(const Checkpoint& checkpoint, std::span<const std::string> views) {
  Standardizer st;
  for (const auto& v : views) {
    const std::string prefix = "norm/" + v + "/";
    if (!checkpoint.has_array(prefix + "mean")) continue;
    st.stats_.push_back({v, checkpoint.array(prefix + "mean"), checkpoint.array(prefix + "std")});
  }
  return st;
}

}  // namespace deepmood
