// SPDX-License-Identifier: Apache-2.0
#include "deepmood/session_cache.hpp"

#include <array>
#include <fstream>

#include "deepmood/errors.hpp"

namespace deepmood {

namespace {

constexpr std::array<char, 6> kMagic = {'D', 'M', 'S', 'E', 'S', 'S'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError(std::string("session cache: truncated while reading ") + what);
  }
  return value;
}

}  // namespace

void write_session_cache(std::ostream& out, const SessionCache& cache) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(out, kSessionCacheVersion);
  put<std::uint8_t>(out, cache.options.log_transform ? 1 : 0);
  put<std::uint64_t>(out, cache.sessions.size());
  for (const auto& s : cache.sessions) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.user_id.size()));
    out.write(s.user_id.data(), static_cast<std::streamsize>(s.user_id.size()));
    put<std::int64_t>(out, s.start_ms);
    put<std::int64_t>(out, s.end_ms);
    put<std::int32_t>(out, s.hdrs);
    put<std::int32_t>(out, s.ymrs);
    for (std::size_t v = 0; v < kNumViews; ++v) {
      const Matrix& m = s.views[v];
      if (m.cols() != kViewDims[v]) {
        throw ShapeError("session cache: view '" + kViewNames[v] + "' has " +
                         std::to_string(m.cols()) + " columns");
      }
      put<std::uint64_t>(out, m.rows());
      const auto data = m.data();
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
  }
  if (!out) throw DataError("session cache: write failed");
}

void write_session_cache(const std::filesystem::path& path, const SessionCache& cache) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("session cache: cannot open '" + path.string() + "' for writing");
  write_session_cache(out, cache);
}

SessionCache read_session_cache(std::istream& in) {
  std::array<char, 6> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("session cache: bad magic (not a deepmood session cache)");
  }
  const auto version = get<std::uint8_t>(in, "version");
  if (version != kSessionCacheVersion) {
    throw DataError("session cache: version " + std::to_string(version) + " not supported (expected " +
                    std::to_string(kSessionCacheVersion) + "); re-run ingest");
  }
  SessionCache cache;
  cache.options.log_transform = get<std::uint8_t>(in, "flags") != 0;
  const auto count = get<std::uint64_t>(in, "session count");
  for (std::uint64_t i = 0; i < count; ++i) {
    FeaturizedSession s;
    const auto len = get<std::uint32_t>(in, "user id length");
    s.user_id.resize(len);
    if (len > 0 && !in.read(s.user_id.data(), len)) throw DataError("session cache: truncated user id");
    s.start_ms = get<std::int64_t>(in, "start");
    s.end_ms = get<std::int64_t>(in, "end");
    s.hdrs = get<std::int32_t>(in, "hdrs");
    s.ymrs = get<std::int32_t>(in, "ymrs");
    for (std::size_t v = 0; v < kNumViews; ++v) {
      const auto rows = get<std::uint64_t>(in, "view rows");
      s.views[v] = Matrix(rows, kViewDims[v]);
      auto data = s.views[v].data();
      if (!data.empty() && !in.read(reinterpret_cast<char*>(data.data()),
                                    static_cast<std::streamsize>(data.size() * sizeof(double)))) {
        throw DataError("session cache: truncated view data");
      }
    }
    cache.sessions.push_back(std::move(s));
  }
  return cache;
}

SessionCache read_session_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("session cache: cannot open '" + path.string() + "'");
  return read_session_cache(in);
}

}  // namespace deepmood
