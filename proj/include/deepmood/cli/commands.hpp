// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "deepmood/fusion.hpp"
#include "deepmood/metrics.hpp"
#include "deepmood/model.hpp"
#include "deepmood/training.hpp"

namespace deepmood::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitCheckFailed = 3,
};

/// Environment variable holding the default number of grid worker threads.
inline constexpr const char* kThreadsEnv = "DEEPMOOD_THREADS";

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Never throws; errors are reported on `err` and mapped to an exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::filesystem::path cache;
  std::filesystem::path out_dir;
  HeadKind head = HeadKind::kMultiViewMachine;
  Task task = Task::kClassification;
  std::size_t hidden_dim = 8;
  std::size_t factors = 8;
  std::vector<std::string> views;  // empty = all three
  double split_ratio = 0.8;
  TrainConfig train;
  bool save_initial = false;
  bool quiet = false;
};

struct TrainSummary {
  std::size_t hidden_dim = 0;
  std::size_t factors = 0;
  std::uint64_t seed = 0;
  std::optional<Metrics> val;
};

/// One training run writing checkpoint.bin, metrics.json, series.csv and
/// manifest.json (plus initial.bin with save_initial) into out_dir.
TrainSummary run_training(const TrainOptions& options, std::ostream& log);

/// Seed of grid cell `cell`, derived from the master seed so that cells are
/// independent of each other and of the thread schedule.
std::uint64_t grid_cell_seed(std::uint64_t master, std::size_t cell);

}  // namespace deepmood::cli
