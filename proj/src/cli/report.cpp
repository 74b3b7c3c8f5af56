// SPDX-License-Identifier: Apache-2.0
#include "deepmood/cli/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "deepmood/errors.hpp"

namespace deepmood::cli {

namespace {

constexpr std::string_view kSeriesHeader = "epoch,train_loss,val_loss,val_accuracy,val_f_score,val_rmse";

std::optional<double> parse_optional(std::string_view field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError("series: line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

nlohmann::json metrics_to_json(const Metrics& m, Task task) {
  nlohmann::json j = {{"count", m.count}, {"loss", m.loss}};
  if (task == Task::kClassification) {
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f_score"] = m.f_score;
  } else {
    j["rmse"] = m.rmse;
  }
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j, Task task) {
  try {
    Metrics m;
    m.count = j.at("count").get<std::size_t>();
    m.loss = j.at("loss").get<double>();
    if (task == Task::kClassification) {
      m.accuracy = j.at("accuracy").get<double>();
      m.precision = j.at("precision").get<double>();
      m.recall = j.at("recall").get<double>();
      m.f_score = j.at("f_score").get<double>();
    } else {
      m.rmse = j.at("rmse").get<double>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics block: ") + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

nlohmann::json read_report(const std::filesystem::path& path, std::string_view expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || j["schema_version"] != kReportSchemaVersion) {
    throw DataError("'" + path.string() + "': missing or unsupported schema_version");
  }
  if (j.value("kind", std::string()) != expected_kind) {
    throw DataError("'" + path.string() + "': expected a '" + std::string(expected_kind) + "' report");
  }
  return j;
}

std::vector<SeriesRow> series_from_history(const std::vector<EpochRecord>& history, Task task) {
  std::vector<SeriesRow> rows;
  for (const auto& r : history) {
    SeriesRow row;
    row.epoch = r.epoch;
    row.train_loss = r.train_loss;
    if (r.val) {
      row.val_loss = r.val->loss;
      if (task == Task::kClassification) {
        row.val_accuracy = r.val->accuracy;
        row.val_f_score = r.val->f_score;
      } else {
        row.val_rmse = r.val->rmse;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void write_series(const std::filesystem::path& path, const std::vector<SeriesRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "#schema_version=" << kReportSchemaVersion << '\n' << kSeriesHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << opt(r.val_loss) << ','
        << opt(r.val_accuracy) << ',' << opt(r.val_f_score) << ',' << opt(r.val_rmse) << '\n';
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

std::vector<SeriesRow> read_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "#schema_version=" + std::to_string(kReportSchemaVersion)) {
    throw DataError("series: missing or unsupported schema line in '" + path.string() + "'");
  }
  if (!std::getline(in, line) || line != kSeriesHeader) {
    throw DataError("series: header must be '" + std::string(kSeriesHeader) + "'");
  }
  std::vector<SeriesRow> rows;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw DataError("series: line " + std::to_string(line_no) + ": expected 6 fields");
    SeriesRow r;
    const auto epoch = parse_optional(f[0], line_no);
    const auto loss = parse_optional(f[1], line_no);
    if (!epoch || !loss) throw DataError("series: line " + std::to_string(line_no) + ": epoch and train_loss required");
    r.epoch = static_cast<std::size_t>(*epoch);
    r.train_loss = *loss;
    r.val_loss = parse_optional(f[2], line_no);
    r.val_accuracy = parse_optional(f[3], line_no);
    r.val_f_score = parse_optional(f[4], line_no);
    r.val_rmse = parse_optional(f[5], line_no);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace deepmood::cli
