#ifndef STEINGLM_HARNESS_HPP
#define STEINGLM_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steinglm/dataset.hpp"
#include "steinglm/init.hpp"
#include "steinglm/train.hpp"

namespace steinglm {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetConfig {
  std::string id;
  std::string path;
  Task task = Task::Regression;
  std::vector<ColumnSchema> schema;
};

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<std::size_t> depths;
  std::optional<std::size_t> width;  // empty = the min{d, 20} rule
  std::vector<InitScheme> schemes;
  std::size_t repeats = 1;
  std::uint64_t seed_base = 0;
  Activation hidden_activation = Activation::Tanh;
  TrainConfig train;
  bool auto_batch = true;  // batch = min(500, 20% of train size)
  std::size_t threads = 1;
  std::string output_dir = "out";

  void validate() const;
};

/// FNV-1a over the raw bytes, hex-encoded. Stable across platforms.
std::string fnv1a_hex(const std::string& bytes);

ExperimentConfig parse_config(const nlohmann::json& j);
/// Loads, parses, and hashes a config file.
ExperimentConfig load_config_file(const std::string& path, std::string* config_hash);

struct TrialResult {
  std::string dataset;
  std::size_t depth = 0;
  std::string scheme;
  std::uint64_t seed = 0;
  std::size_t repeat = 0;
  double init_seconds = 0.0;
  double train_seconds = 0.0;
  double test_metric = 0.0;
  std::size_t best_epoch = 0;
  double init_val_loss = 0.0;  // validation loss before any training step
  bool divergent = false;
  bool failed = false;
  std::string error;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_metric;

  std::string key() const;
};

nlohmann::json trial_to_json(const TrialResult& t);
TrialResult trial_from_json(const nlohmann::json& j);

struct AggregateRow {
  std::string dataset;
  std::size_t depth = 0;
  std::string scheme;
  Task task = Task::Regression;
  double metric_mean = 0.0;
  double metric_std = 0.0;  // sample std-dev over repeats
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::vector<double> mean_train_loss;  // pooled per-epoch trajectory
};

struct ExperimentReport {
  std::string version = kVersion;
  std::string config_hash;
  std::size_t threads = 1;
  std::vector<TrialResult> trials;
  std::vector<AggregateRow> aggregates;
};

/// Recompute aggregates from trials (used both by the runner and by the
/// round-trip invariant checks).
std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials,
                                    const ExperimentConfig& config);

/// Run one (dataset, depth, scheme, seed) trial end to end: split,
/// preprocess, initialize, train, evaluate on the test rows.
TrialResult run_single_trial(const RawTable& raw, const DatasetConfig& dc,
                             std::size_t depth, const InitScheme& scheme,
                             std::uint64_t seed, std::size_t repeat,
                             const ExperimentConfig& config);

/// Full sweep with per-trial persistence to <out_dir>/results.jsonl
/// (append-only; rerunning resumes, skipping trials already on disk).
/// Per-trial failures are recorded and skipped in aggregates.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                std::size_t threads, const std::string& config_hash);

enum class ReportFormat { Json, CsvTables };

void emit_report(const ExperimentReport& report, const ExperimentConfig& config,
                 const std::string& out_dir, ReportFormat format);

/// Thread budget resolution: explicit CLI value, then STEINIT_THREADS, then
/// the config, then 1.
std::size_t resolve_threads(std::optional<std::size_t> cli_threads,
                            const ExperimentConfig& config);

nlohmann::json params_to_json(const NetworkParams& params, const Architecture& arch);
void params_from_json(const nlohmann::json& j, NetworkParams* params, Architecture* arch);

std::size_t effective_width(std::optional<std::size_t> width, std::size_t d);

InitScheme scheme_from_json(const nlohmann::json& j);

}  // namespace steinglm

#endif
