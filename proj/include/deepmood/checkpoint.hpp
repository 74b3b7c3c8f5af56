// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepmood/matrix.hpp"
#include "deepmood/model.hpp"

namespace deepmood {

/// Binary checkpoint layout (little-endian):
///
///   "DMCKPT\0\0"            8-byte magic
///   u32 version             kCheckpointVersion
///   u64 n, n bytes          config echo as compact JSON (keys sorted)
///   u64 count               number of arrays
///   per array:
///     u32 n, n bytes        name
///     u64 rows, u64 cols
///     rows*cols f64         raw IEEE-754 values, row-major
///
/// Values are copied byte for byte, so write -> read is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  /// Throws DataError when the name is absent.
  const Matrix& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws DataError on bad magic, unsupported version or truncation.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Appends every model parameter under its named_parameters() name.
void store_model(Checkpoint& checkpoint, const ModelParams& params, const ModelConfig& config);
/// Rebuilds parameters for `config`, reading each array by name and checking
/// its shape. Throws DataError on a missing array or shape mismatch.
ModelParams load_model(const Checkpoint& checkpoint, const ModelConfig& config);

}  // namespace deepmood
