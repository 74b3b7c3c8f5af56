// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deepmood/metrics.hpp"
#include "deepmood/model.hpp"
#include "deepmood/training.hpp"

namespace deepmood::cli {

/// Shared by every JSON report and the series CSV.
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json metrics_to_json(const Metrics& metrics, Task task);
Metrics metrics_from_json(const nlohmann::json& j, Task task);

/// Pretty-printed with a trailing newline. Output depends only on `j`.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
/// Parses a report and checks its "schema_version" and "kind" fields.
/// Throws DataError on a mismatch.
nlohmann::json read_report(const std::filesystem::path& path, std::string_view expected_kind);

/// One line per epoch of the series file:
///   #schema_version=1
///   epoch,train_loss,val_loss,val_accuracy,val_f_score,val_rmse
/// Fields that do not apply (no validation, or the other task) are empty.
struct SeriesRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  std::optional<double> val_f_score;
  std::optional<double> val_rmse;
};

std::vector<SeriesRow> series_from_history(const std::vector<EpochRecord>& history, Task task);
void write_series(const std::filesystem::path& path, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace deepmood::cli
