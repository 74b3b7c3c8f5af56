// SPDX-License-Identifier: Apache-2.0
#include "deepmood/pipeline.hpp"

namespace deepmood {

std::vector<FeaturizedSession> ingest(std::span<const RawEvent> events,
                                      std::span<const LabelRecord> labels,
                                      const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  IngestReport& r = report != nullptr ? *report : local;
  auto sessions = segment_all_users(events, options.gap_ms, &r.segment);
  r.segmented = sessions.size();
  sessions = filter_sessions(std::move(sessions), options.max_len, options.min_len);
  r.after_filter = sessions.size();
  sessions = attach_labels(std::move(sessions), labels, &r.labels);
  std::vector<FeaturizedSession> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(featurize(s, options.features));
  return out;
}

PreparedData prepare(std::span<const FeaturizedSession> sessions, double train_ratio,
                     const Standardizer* fixed) {
  PreparedData p;
  const auto keys = session_keys(sessions);
  p.split = temporal_split(keys, train_ratio);
  const Dataset all = make_dataset(sessions);
  p.train = all.subset(p.split.train);
  p.val = all.subset(p.split.val);
  p.standardizer = fixed != nullptr ? *fixed : Standardizer::fit(p.train);
  p.standardizer.apply(p.train);
  p.standardizer.apply(p.val);
  return p;
}

}  // namespace deepmood
