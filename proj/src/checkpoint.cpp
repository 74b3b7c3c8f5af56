// SPDX-License-Identifier: Apache-2.0
#include "deepmood/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "deepmood/errors.hpp"

namespace deepmood {

static_assert(std::endian::native == std::endian::little,
              "checkpoint and cache encoders assume a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'M', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError(std::string("checkpoint: truncated while reading ") + what);
  }
  return value;
}

std::string get_string(std::istream& in, std::uint64_t length, const char* what) {
  std::string s(length, '\0');
  if (length > 0 && !in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw DataError(std::string("checkpoint: truncated while reading ") + what);
  }
  return s;
}

}  // namespace

const Matrix& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a.value;
  throw DataError("checkpoint: missing array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string config = checkpoint.config.dump();
  put<std::uint64_t>(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put<std::uint64_t>(out, checkpoint.arrays.size());
  for (const auto& a : checkpoint.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put<std::uint64_t>(out, a.value.rows());
    put<std::uint64_t>(out, a.value.cols());
    const auto data = a.value.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw DataError("checkpoint: write failed");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, checkpoint);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("checkpoint: bad magic (not a deepmood checkpoint)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint checkpoint;
  const auto config_len = get<std::uint64_t>(in, "config length");
  try {
    checkpoint.config = nlohmann::json::parse(get_string(in, config_len, "config"));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint: corrupt config block: ") + e.what());
  }
  const auto count = get<std::uint64_t>(in, "array count");
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = get_string(in, get<std::uint32_t>(in, "name length"), "array name");
    const auto rows = get<std::uint64_t>(in, "rows");
    const auto cols = get<std::uint64_t>(in, "cols");
    a.value = Matrix(rows, cols);
    auto data = a.value.data();
    if (!data.empty() && !in.read(reinterpret_cast<char*>(data.data()),
                                  static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw DataError("checkpoint: truncated array '" + a.name + "'");
    }
    checkpoint.arrays.push_back(std::move(a));
  }
  return checkpoint;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

nlohmann::json model_config_to_json(const ModelConfig& config) {
  return {
      {"views", config.view_names},
      {"view_input_dims", config.view_input_dims},
      {"d_h", config.hidden_dim},
      {"k", config.factors},
      {"head", std::string(head_name(config.head))},
      {"task", std::string(task_name(config.task))},
      {"bidirectional", config.bidirectional},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.view_names = j.at("views").get<std::vector<std::string>>();
    c.view_input_dims = j.at("view_input_dims").get<std::vector<std::size_t>>();
    c.hidden_dim = j.at("d_h").get<std::size_t>();
    c.factors = j.at("k").get<std::size_t>();
    c.head = parse_head(j.at("head").get<std::string>());
    c.task = parse_task(j.at("task").get<std::string>());
    c.bidirectional = j.at("bidirectional").get<bool>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad model config: ") + e.what());
  }
}

void store_model(Checkpoint& checkpoint, const ModelParams& params, const ModelConfig& config) {
  for (const auto& p : named_parameters(params, config.view_names)) {
    checkpoint.arrays.push_back({p.name, *p.value});
  }
}

ModelParams load_model(const Checkpoint& checkpoint, const ModelConfig& config) {
  Rng unused(0);
  ModelParams params = zeros_like(init_model(config, unused));
  for (auto& p : named_parameters(params, config.view_names)) {
    const Matrix& stored = checkpoint.array(p.name);
    if (!stored.same_shape(*p.value)) {
      throw DataError("checkpoint: array '" + p.name + "' has shape " + stored.shape_string() +
                      ", model expects " + p.value->shape_string());
    }
    *p.value = stored;
  }
  return params;
}

}  // namespace deepmood
