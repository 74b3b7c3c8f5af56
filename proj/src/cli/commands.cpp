// SPDX-License-Identifier: Apache-2.0
#include "deepmood/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepmood/checkpoint.hpp"
#include "deepmood/cli/hash.hpp"
#include "deepmood/cli/report.hpp"
#include "deepmood/errors.hpp"
#include "deepmood/events.hpp"
#include "deepmood/features.hpp"
#include "deepmood/gradcheck.hpp"
#include "deepmood/pipeline.hpp"
#include "deepmood/rng.hpp"
#include "deepmood/session_cache.hpp"
#include "deepmood/synth.hpp"

namespace deepmood::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kGridValues[] = {4, 8, 16};
constexpr std::size_t kProgressEvery = 25;

/// A check ran to completion and failed (exit code 3).
struct CheckFailed {
  std::string message;
};

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path.string() + "'");
  return in;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  const fs::path probe = dir / ".write_test";
  {
    std::ofstream test(probe);
    if (!test) throw DataError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

json file_entry(const fs::path& path, const std::string& display) {
  return {{"path", display}, {"git_blob_sha1", git_blob_hash_file(path)}};
}

json manifest_base(const std::string& command) {
  return {{"schema_version", kReportSchemaVersion}, {"kind", "manifest"}, {"command", command}};
}

std::string head_dims_string(std::size_t dh, std::size_t k) {
  return "dh" + std::to_string(dh) + "_k" + std::to_string(k);
}

void print_metrics(std::ostream& out, const std::string& title, const Metrics& m, Task task) {
  char line[160];
  if (task == Task::kClassification) {
    std::snprintf(line, sizeof(line), "%-12s n=%-6zu loss=%.6f  accuracy=%.4f  precision=%.4f  recall=%.4f  f_score=%.4f\n",
                  title.c_str(), m.count, m.loss, m.accuracy, m.precision, m.recall, m.f_score);
  } else {
    std::snprintf(line, sizeof(line), "%-12s n=%-6zu loss=%.6f  rmse=%.4f\n", title.c_str(), m.count, m.loss, m.rmse);
  }
  out << line;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::size_t view_dim(const std::string& view) {
  for (std::size_t v = 0; v < kNumViews; ++v)
    if (kViewNames[v] == view) return kViewDims[v];
  std::string valid;
  for (const auto& n : kViewNames) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown view '" + view + "' (valid: " + valid + ")");
}

std::size_t thread_count() {
  const char* env = std::getenv(kThreadsEnv);
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer, got '" + env + "'");
  }
  return static_cast<std::size_t>(n);
}

// ---- synth ---------------------------------------------------------------

int cmd_synth(const fs::path& config_path, const fs::path& out_dir, std::ostream& out) {
  json raw;
  {
    auto in = open_input(config_path, "synth config");
    try {
      raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("synth config '" + config_path.string() + "' is not valid JSON: " + e.what());
    }
  }
  const SynthConfig config = synth_config_from_json(raw);
  ensure_directory(out_dir);
  const SynthOutput data = generate(config);

  const fs::path events_path = out_dir / "events.csv";
  const fs::path labels_path = out_dir / "labels.csv";
  {
    std::ofstream ev(events_path, std::ios::binary | std::ios::trunc);
    if (!ev) throw DataError("cannot write '" + events_path.string() + "'");
    write_event_log(ev, data.events);
    std::ofstream lb(labels_path, std::ios::binary | std::ios::trunc);
    if (!lb) throw DataError("cannot write '" + labels_path.string() + "'");
    write_labels(lb, data.labels);
  }
  std::size_t positive = 0;
  for (const auto& s : data.truth) positive += static_cast<std::size_t>(s.mood_class);

  json manifest = manifest_base("synth");
  manifest["config"] = synth_config_to_json(config);
  manifest["seed"] = config.seed;
  manifest["outputs"] = {{"events", file_entry(events_path, "events.csv")},
                         {"labels", file_entry(labels_path, "labels.csv")}};
  manifest["ground_truth"] = {{"users", config.n_users},
                              {"sessions", data.truth.size()},
                              {"positive_sessions", positive},
                              {"sessions_after_filter", data.expected_sessions_after_filter()},
                              {"events", data.events.size()},
                              {"assessments", data.labels.size()}};
  write_json_file(out_dir / "manifest.json", manifest);
  out << "wrote " << data.events.size() << " events, " << data.labels.size() << " assessments ("
      << data.truth.size() << " sessions, " << data.expected_sessions_after_filter()
      << " expected after filtering) to " << out_dir.string() << '\n';
  return kExitOk;
}

// ---- ingest --------------------------------------------------------------

int cmd_ingest(const fs::path& events_path, const fs::path& labels_path, const fs::path& cache_path,
               const IngestOptions& options, std::ostream& out, std::ostream& err) {
  EventLog log;
  {
    auto in = open_input(events_path, "event log");
    log = read_event_log(in);
  }
  std::vector<LabelRecord> labels;
  {
    auto in = open_input(labels_path, "label file");
    labels = read_labels(in);
  }
  IngestReport report;
  SessionCache cache;
  cache.options = options.features;
  cache.sessions = ingest(log.events, labels, options, &report);

  if (report.segment.resorted) err << "warning: events were not in timestamp order; sorted before segmenting\n";
  if (log.unknown_special > 0) {
    err << "warning: " << log.unknown_special << " unknown special-key categories mapped to 'other'\n";
  }
  if (report.segment.accel_only_users > 0) {
    err << "warning: " << report.segment.accel_only_users << " users had accelerometer data but no keypresses\n";
  }
  out << "events               " << log.events.size() << '\n'
      << "users                " << report.segment.users << '\n'
      << "sessions segmented   " << report.segmented << '\n'
      << "dropped by filter    " << report.segmented - report.after_filter << '\n'
      << "dropped unlabeled    " << report.labels.dropped << '\n'
      << "sessions retained    " << cache.sessions.size() << '\n'
      << "accel discarded      " << report.segment.accel_discarded << '\n';
  if (cache.sessions.empty()) throw DataError("no sessions retained; nothing to write");

  if (cache_path.has_parent_path()) ensure_directory(cache_path.parent_path());
  write_session_cache(cache_path, cache);

  json manifest = manifest_base("ingest");
  manifest["config"] = {{"gap_ms", options.gap_ms},
                        {"max_len", options.max_len},
                        {"min_len", options.min_len},
                        {"log_transform", options.features.log_transform}};
  manifest["inputs"] = {{"events", file_entry(events_path, events_path.filename().string())},
                        {"labels", file_entry(labels_path, labels_path.filename().string())}};
  manifest["outputs"] = {{"cache", file_entry(cache_path, cache_path.filename().string())}};
  manifest["counts"] = {{"events", log.events.size()},
                        {"users", report.segment.users},
                        {"segmented", report.segmented},
                        {"after_filter", report.after_filter},
                        {"unlabeled_dropped", report.labels.dropped},
                        {"retained", cache.sessions.size()},
                        {"accel_discarded", report.segment.accel_discarded},
                        {"unknown_special", log.unknown_special},
                        {"resorted", report.segment.resorted}};
  fs::path manifest_path = cache_path;
  manifest_path += ".manifest.json";
  write_json_file(manifest_path, manifest);
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct LoadedData {
  SessionCache cache;
  PreparedData prepared;
};

ModelConfig build_model_config(const TrainOptions& o, const std::vector<std::string>& views) {
  ModelConfig c;
  c.view_names = views;
  for (const auto& v : views) c.view_input_dims.push_back(view_dim(v));
  c.hidden_dim = o.hidden_dim;
  c.factors = o.factors;
  c.head = o.head;
  c.task = o.task;
  c.validate();
  return c;
}

void validate_train_options(const TrainOptions& o) {
  if (o.hidden_dim == 0) throw ConfigError("--d_h must be >= 1");
  if (o.factors == 0) throw ConfigError("--k must be >= 1");
  if (o.train.epochs == 0) throw ConfigError("--epochs must be >= 1");
  if (o.train.batch_size == 0) throw ConfigError("--batch must be >= 1");
  if (!(o.train.learning_rate >= 0.0)) throw ConfigError("--lr must be >= 0");
  if (!(o.train.dropout >= 0.0 && o.train.dropout < 1.0)) throw ConfigError("--dropout must be in [0, 1)");
  if (!(o.split_ratio > 0.0 && o.split_ratio < 1.0)) throw ConfigError("--split must be in (0, 1)");
}

json train_config_json(const TrainOptions& o, const std::vector<std::string>& views) {
  return {{"head", std::string(head_name(o.head))},
          {"task", std::string(task_name(o.task))},
          {"d_h", o.hidden_dim},
          {"k", o.factors},
          {"views", views},
          {"epochs", o.train.epochs},
          {"batch_size", o.train.batch_size},
          {"learning_rate", o.train.learning_rate},
          {"dropout", o.train.dropout},
          {"seed", o.train.seed},
          {"split_ratio", o.split_ratio},
          {"rmsprop_decay", o.train.rmsprop.decay},
          {"rmsprop_epsilon", o.train.rmsprop.epsilon}};
}

Checkpoint make_checkpoint(const ModelConfig& model, const ModelParams& params, const Standardizer& st,
                           const json& train_cfg, bool log_transform) {
  Checkpoint ck;
  ck.config = {{"model", model_config_to_json(model)}, {"train", train_cfg}, {"log_transform", log_transform}};
  store_model(ck, params, model);
  st.store(ck);
  return ck;
}

TrainSummary train_on(const LoadedData& data, const TrainOptions& o, std::ostream& log) {
  validate_train_options(o);
  const std::vector<std::string> views =
      o.views.empty() ? std::vector<std::string>(kViewNames.begin(), kViewNames.end()) : o.views;
  const ModelConfig model = build_model_config(o, views);
  const Dataset train_set = data.prepared.train.select_views(views);
  const Dataset val_set = data.prepared.val.select_views(views);
  if (train_set.size() == 0) throw DataError("train split is empty");

  Rng init_rng(mix_seed(o.train.seed));
  const ModelParams initial = init_model(model, init_rng);
  ensure_directory(o.out_dir);
  const json train_cfg = train_config_json(o, views);
  if (o.save_initial) {
    write_checkpoint(o.out_dir / "initial.bin",
                     make_checkpoint(model, initial, data.prepared.standardizer, train_cfg,
                                     data.cache.options.log_transform));
  }

  const auto progress = [&](const EpochRecord& r) {
    if (o.quiet || (r.epoch % kProgressEvery != 0 && r.epoch != o.train.epochs)) return;
    log << "epoch " << r.epoch << "  train_loss " << format_double(r.train_loss);
    if (r.val) log << "  val_loss " << format_double(r.val->loss);
    log << '\n';
  };
  const TrainResult result =
      train(model, initial, train_set, val_set.size() > 0 ? &val_set : nullptr, o.train, progress);

  const fs::path ckpt = o.out_dir / "checkpoint.bin";
  const fs::path metrics_path = o.out_dir / "metrics.json";
  const fs::path series_path = o.out_dir / "series.csv";
  write_checkpoint(ckpt, make_checkpoint(model, result.params, data.prepared.standardizer, train_cfg,
                                         data.cache.options.log_transform));
  write_series(series_path, series_from_history(result.history, o.task));

  json metrics = {{"schema_version", kReportSchemaVersion},
                  {"kind", "train_metrics"},
                  {"config", train_cfg},
                  {"parameters", {{"fusion", counted_parameters(result.params.head)},
                                  {"total", total_parameters(result.params)}}},
                  {"train", {{"count", train_set.size()},
                             {"final_loss", result.history.empty() ? 0.0 : result.history.back().train_loss}}},
                  {"val", result.final_val ? metrics_to_json(*result.final_val, o.task) : json(nullptr)}};
  write_json_file(metrics_path, metrics);

  json manifest = manifest_base("train");
  manifest["config"] = train_cfg;
  manifest["seed"] = o.train.seed;
  manifest["inputs"] = {{"cache", file_entry(o.cache, o.cache.filename().string())}};
  manifest["outputs"] = {{"checkpoint", "checkpoint.bin"}, {"metrics", "metrics.json"}, {"series", "series.csv"}};
  write_json_file(o.out_dir / "manifest.json", manifest);

  return {o.hidden_dim, o.factors, o.train.seed, result.final_val};
}

LoadedData load_data(const fs::path& cache_path, double split_ratio) {
  LoadedData d;
  d.cache = read_session_cache(cache_path);
  if (d.cache.sessions.empty()) throw DataError("session cache '" + cache_path.string() + "' holds no sessions");
  d.prepared = prepare(d.cache.sessions, split_ratio);
  return d;
}

int cmd_train(TrainOptions o, bool grid, std::ostream& out, std::ostream& err) {
  validate_train_options(o);
  const LoadedData data = load_data(o.cache, o.split_ratio);
  out << "split: " << data.prepared.train.size() << " train / " << data.prepared.val.size() << " val sessions";
  if (data.prepared.split.users_without_val > 0) {
    out << " (" << data.prepared.split.users_without_val << " users with < 2 sessions kept in train only)";
  }
  out << '\n';
  if (!grid) {
    const TrainSummary s = train_on(data, o, err);
    if (s.val) print_metrics(out, "val", *s.val, o.task);
    out << "wrote " << (o.out_dir / "checkpoint.bin").string() << '\n';
    return kExitOk;
  }

  std::vector<TrainOptions> cells;
  for (std::size_t dh : kGridValues) {
    for (std::size_t k : kGridValues) {
      TrainOptions c = o;
      c.hidden_dim = dh;
      c.factors = k;
      c.train.seed = grid_cell_seed(o.train.seed, cells.size());
      c.out_dir = o.out_dir / head_dims_string(dh, k);
      c.quiet = true;
      cells.push_back(std::move(c));
    }
  }
  ensure_directory(o.out_dir);
  const std::size_t threads = std::min(thread_count(), cells.size());
  std::vector<TrainSummary> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        std::ostringstream sink;
        results[i] = train_on(data, cells[i], sink);
        std::lock_guard<std::mutex> lock(log_mutex);
        err << "finished " << head_dims_string(cells[i].hidden_dim, cells[i].factors) << '\n';
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const bool classification = o.task == Task::kClassification;
  std::optional<std::size_t> best;
  json cell_reports = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    cell_reports.push_back({{"d_h", r.hidden_dim},
                            {"k", r.factors},
                            {"seed", r.seed},
                            {"dir", head_dims_string(r.hidden_dim, r.factors)},
                            {"val", r.val ? metrics_to_json(*r.val, o.task) : json(nullptr)}});
    if (!r.val) continue;
    if (!best || (classification ? r.val->accuracy > results[*best].val->accuracy
                                 : r.val->rmse < results[*best].val->rmse)) {
      best = i;
    }
    print_metrics(out, head_dims_string(r.hidden_dim, r.factors), *r.val, o.task);
  }
  if (!best) throw DataError("grid: no cell produced validation metrics (empty validation split)");
  json summary = {{"schema_version", kReportSchemaVersion},
                  {"kind", "grid_summary"},
                  {"head", std::string(head_name(o.head))},
                  {"task", std::string(task_name(o.task))},
                  {"master_seed", o.train.seed},
                  {"selection", classification ? "max val accuracy" : "min val rmse"},
                  {"cells", cell_reports},
                  {"selected", cell_reports[*best]}};
  write_json_file(o.out_dir / "grid_summary.json", summary);
  out << "selected " << head_dims_string(results[*best].hidden_dim, results[*best].factors)
      << " on the validation set\n";
  return kExitOk;
}

// ---- eval ----------------------------------------------------------------

int cmd_eval(const fs::path& ckpt_path, const fs::path& cache_path, const std::string& ablate,
             const std::string& split, const fs::path& json_out, std::ostream& out) {
  const Checkpoint ck = read_checkpoint(ckpt_path);
  if (!ck.config.contains("model") || !ck.config.contains("train")) {
    throw DataError("checkpoint '" + ckpt_path.string() + "' lacks model/train config");
  }
  const ModelConfig model = model_config_from_json(ck.config["model"]);
  const ModelParams params = load_model(ck, model);
  const Standardizer st = Standardizer::load(ck, std::vector<std::string>(kViewNames.begin(), kViewNames.end()));
  double ratio = 0.8;
  bool log_transform = true;
  try {
    ratio = ck.config["train"].at("split_ratio").get<double>();
    log_transform = ck.config.at("log_transform").get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }

  const SessionCache cache = read_session_cache(cache_path);
  if (cache.options.log_transform != log_transform) {
    throw DataError("checkpoint/config mismatch: checkpoint was trained with log_transform=" +
                    std::string(log_transform ? "on" : "off") + " but the cache has it " +
                    (cache.options.log_transform ? "on" : "off"));
  }
  if (cache.sessions.empty()) throw DataError("session cache holds no sessions");
  const PreparedData prepared = prepare(cache.sessions, ratio, &st);

  Dataset data;
  if (split == "val") {
    data = prepared.val;
  } else if (split == "train") {
    data = prepared.train;
  } else {
    data = make_dataset(cache.sessions);
    st.apply(data);
  }
  data = data.select_views(model.view_names);
  if (data.size() == 0) throw DataError("the " + split + " split is empty");

  if (!ablate.empty()) {
    const auto it = std::find(model.view_names.begin(), model.view_names.end(), ablate);
    if (it == model.view_names.end()) {
      std::string valid;
      for (const auto& n : model.view_names) valid += (valid.empty() ? "" : ", ") + n;
      throw ConfigError("unknown view '" + ablate + "' for --ablate-view (valid: " + valid + ")");
    }
    // standardized inputs are zero-mean, so zeros carry no information
    for (auto& m : data.views[static_cast<std::size_t>(it - model.view_names.begin())]) m.fill(0.0);
  }

  const Metrics m = evaluate(model, params, data);
  print_metrics(out, ablate.empty() ? split : split + " -" + ablate, m, model.task);
  if (!json_out.empty()) {
    write_json_file(json_out, {{"schema_version", kReportSchemaVersion},
                               {"kind", "eval_metrics"},
                               {"split", split},
                               {"ablated_view", ablate.empty() ? json(nullptr) : json(ablate)},
                               {"inputs", {{"checkpoint", file_entry(ckpt_path, ckpt_path.filename().string())},
                                           {"cache", file_entry(cache_path, cache_path.filename().string())}}},
                               {"metrics", metrics_to_json(m, model.task)}});
  }
  return kExitOk;
}

// ---- gradcheck / describe ------------------------------------------------

int cmd_gradcheck(std::uint64_t seed, bool corrupt, std::ostream& out) {
  GradCheckOptions o;
  o.seed = seed;
  o.corrupt = corrupt;
  const GradCheckReport report = run_gradcheck(o);
  out << report.table();
  char line[128];
  std::snprintf(line, sizeof(line), "max relative error %.3e (tolerance %.1e): %s\n", report.max_rel_error(),
                report.tolerance, report.passed() ? "PASS" : "FAIL");
  out << line;
  if (!report.passed()) throw CheckFailed{"gradient check failed"};
  return kExitOk;
}

int cmd_describe(const fs::path& events_path, std::int64_t gap_ms, bool as_json, std::ostream& out) {
  auto in = open_input(events_path, "event log");
  const EventLog log = read_event_log(in);
  const LogSummary summary = describe(log.events, gap_ms);
  if (as_json) {
    json j = summary_to_json(summary);
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "log_summary";
    out << j.dump(2) << '\n';
  } else {
    out << format_summary(summary);
  }
  return kExitOk;
}

}  // namespace

std::uint64_t grid_cell_seed(std::uint64_t master, std::size_t cell) {
  return mix_seed(master ^ mix_seed(static_cast<std::uint64_t>(cell) + 1));
}

TrainSummary run_training(const TrainOptions& options, std::ostream& log) {
  validate_train_options(options);
  return train_on(load_data(options.cache, options.split_ratio), options, log);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DeepMood: multi-view late-fusion sequence models for typing-session mood prediction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // synth
  std::string synth_config, synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic event log and label file");
  synth_cmd->add_option("--config", synth_config, "JSON generator settings")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // ingest
  std::string ingest_events, ingest_labels, ingest_out;
  IngestOptions ingest_options;
  bool no_log = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Segment, filter, label and featurize an event log");
  ingest_cmd->add_option("--events", ingest_events, "Event log (CSV)")->required();
  ingest_cmd->add_option("--labels", ingest_labels, "Label file (CSV)")->required();
  ingest_cmd->add_option("--out", ingest_out, "Session cache to write")->required();
  ingest_cmd->add_option("--gap-ms", ingest_options.gap_ms, "Session gap threshold in ms")->capture_default_str();
  ingest_cmd->add_option("--max-len", ingest_options.max_len, "Truncate views to this length")->capture_default_str();
  ingest_cmd->add_option("--min-len", ingest_options.min_len, "Drop sessions with a shorter view")->capture_default_str();
  ingest_cmd->add_flag("--no-log1p", no_log, "Keep raw duration / interval milliseconds");

  // train
  TrainOptions topt;
  std::string cache_path, out_dir, head = "mvm", task = "hdrs", views;
  bool grid = false;
  auto* train_cmd = app.add_subcommand("train", "Train one model (or the d_h x k grid) on a session cache");
  train_cmd->add_option("--cache", cache_path, "Session cache from ingest")->required();
  train_cmd->add_option("--head", head, "Fusion head: fc, fm or mvm")->capture_default_str();
  train_cmd->add_option("--task", task, "hdrs (classification) or ymrs (regression)")->capture_default_str();
  train_cmd->add_option("--d_h", topt.hidden_dim, "Recurrent units per direction")->capture_default_str();
  train_cmd->add_option("--k", topt.factors, "Factor units")->capture_default_str();
  train_cmd->add_option("--epochs", topt.train.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch", topt.train.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--lr", topt.train.learning_rate, "RMSProp learning rate")->capture_default_str();
  train_cmd->add_option("--dropout", topt.train.dropout, "Dropout fraction on encoder outputs")->capture_default_str();
  train_cmd->add_option("--seed", topt.train.seed, "Seed for init, shuffling and dropout")->capture_default_str();
  train_cmd->add_option("--split", topt.split_ratio, "Per-user chronological train fraction")->capture_default_str();
  train_cmd->add_option("--views", views, "Comma-separated view subset, e.g. alph,accel");
  train_cmd->add_flag("--grid", grid, "Train all d_h, k in {4, 8, 16} and select on validation");
  train_cmd->add_flag("--save-initial", topt.save_initial, "Also write the initial parameters");
  train_cmd->add_flag("--quiet", topt.quiet, "No per-epoch progress");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  // eval
  std::string eval_ckpt, eval_cache, ablate, split = "val", eval_json;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a session cache");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint from train")->required();
  eval_cmd->add_option("--cache", eval_cache, "Session cache")->required();
  eval_cmd->add_option("--ablate-view", ablate, "Zero one view's inputs before evaluating");
  eval_cmd->add_option("--split", split, "val, train or all")->capture_default_str()->check(CLI::IsMember({"val", "train", "all"}));
  eval_cmd->add_option("--json", eval_json, "Also write the metrics as JSON");

  // gradcheck
  std::uint64_t gc_seed = 1;
  bool corrupt = false;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  gc_cmd->add_option("--seed", gc_seed, "Instance seed")->capture_default_str();
  gc_cmd->add_flag("--corrupt", corrupt, "Perturb the analytic gradients (negative control)")->group("");

  // describe
  std::string describe_events;
  std::int64_t describe_gap = kDefaultGapMs;
  bool describe_json = false;
  auto* describe_cmd = app.add_subcommand("describe", "Summary statistics of an event log");
  describe_cmd->add_option("--events", describe_events, "Event log (CSV)")->required();
  describe_cmd->add_option("--gap-ms", describe_gap, "Session gap threshold in ms")->capture_default_str();
  describe_cmd->add_flag("--json", describe_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_config, synth_out, out);
    if (ingest_cmd->parsed()) {
      ingest_options.features.log_transform = !no_log;
      return cmd_ingest(ingest_events, ingest_labels, ingest_out, ingest_options, out, err);
    }
    if (train_cmd->parsed()) {
      topt.cache = cache_path;
      topt.out_dir = out_dir;
      topt.head = parse_head(head);
      topt.task = parse_task(task);
      topt.views = split_list(views);
      return cmd_train(topt, grid, out, err);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_cache, ablate, split, eval_json, out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, corrupt, out);
    if (describe_cmd->parsed()) return cmd_describe(describe_events, describe_gap, describe_json, out);
  } catch (const CheckFailed& e) {
    err << "error: " << e.message << '\n';
    return kExitCheckFailed;
  } catch (const std::invalid_argument& e) {  // ConfigError, ShapeError
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {  // DataError, NumericError, I/O
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace deepmood::cli
