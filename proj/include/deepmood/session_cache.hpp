// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "deepmood/features.hpp"

namespace deepmood {

/// Bump on any layout change; readers reject other versions.
inline constexpr std::uint8_t kSessionCacheVersion = 1;

/// Featurized sessions written by `ingest` and read by `train` / `eval`.
///
/// Layout (little-endian): magic "DMSESS", version byte, u8 log-transform
/// flag, u64 session count, then per session: u32 user-id length + bytes,
/// i64 start, i64 end, i32 hdrs, i32 ymrs, and for each of the three views
/// u64 rows followed by rows x d raw f64 values.
struct SessionCache {
  FeatureOptions options;
  std::vector<FeaturizedSession> sessions;
};

void write_session_cache(std::ostream& out, const SessionCache& cache);
void write_session_cache(const std::filesystem::path& path, const SessionCache& cache);
/// Throws DataError on bad magic, a version mismatch or truncation.
SessionCache read_session_cache(std::istream& in);
SessionCache read_session_cache(const std::filesystem::path& path);

}  // namespace deepmood
