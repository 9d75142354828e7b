#include "steinglm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace steinglm {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw std::invalid_argument("config: no datasets");
  if (depths.empty()) throw std::invalid_argument("config: depths must be non-empty");
  if (schemes.empty()) throw std::invalid_argument("config: no schemes");
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  for (const auto& s : schemes)
    if (s.output == OutputInit::Glm && s.lambda_grid.empty())
      throw std::invalid_argument("config: lambda_grid empty for a GLM scheme");
  train.validate();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

InitScheme scheme_from_json(const json& j) {
  InitScheme s;
  s.hidden = hidden_init_from_string(j.at("hidden").get<std::string>());
  s.output = output_init_from_string(j.at("output").get<std::string>());
  if (j.contains("alpha") && !j["alpha"].is_string())
    s.alpha = j["alpha"].get<double>();  // string means "auto"
  if (j.contains("lambda_grid"))
    s.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
  if (j.contains("restandardize_hidden"))
    s.restandardize_hidden = j["restandardize_hidden"].get<bool>();
  return s;
}

namespace {

std::vector<ColumnSchema> schema_from_json(const json& j) {
  std::vector<ColumnSchema> schema;
  for (const auto& col : j.at("columns")) {
    ColumnSchema c;
    c.name = col.at("name").get<std::string>();
    const std::string kind = col.at("kind").get<std::string>();
    if (kind == "numeric")
      c.kind = ColumnKind::Numeric;
    else if (kind == "categorical")
      c.kind = ColumnKind::Categorical;
    else if (kind == "response")
      c.kind = ColumnKind::Response;
    else
      throw std::invalid_argument("config: unknown column kind '" + kind + "'");
    schema.push_back(std::move(c));
  }
  return schema;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  for (const auto& d : j.at("datasets")) {
    DatasetConfig dc;
    dc.id = d.at("id").get<std::string>();
    dc.path = d.at("path").get<std::string>();
    dc.task = task_from_string(d.at("task").get<std::string>());
    dc.schema = schema_from_json(d.at("schema"));
    cfg.datasets.push_back(std::move(dc));
  }
  cfg.depths = j.at("depths").get<std::vector<std::size_t>>();
  if (j.contains("width") && !j["width"].is_string())
    cfg.width = j["width"].get<std::size_t>();  // string means the min{d,20} rule
  for (const auto& s : j.at("schemes")) cfg.schemes.push_back(scheme_from_json(s));
  cfg.repeats = j.value("repeats", std::size_t{1});
  cfg.seed_base = j.value("seed_base", std::uint64_t{0});
  if (j.contains("hidden_activation"))
    cfg.hidden_activation = activation_from_string(j["hidden_activation"].get<std::string>());
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
    cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
    cfg.train.adam_epsilon = t.value("adam_epsilon", cfg.train.adam_epsilon);
    if (t.contains("snapshot_on")) {
      const std::string s = t["snapshot_on"].get<std::string>();
      if (s == "validation-loss")
        cfg.train.snapshot_on = SnapshotOn::ValidationLoss;
      else if (s == "validation-metric")
        cfg.train.snapshot_on = SnapshotOn::ValidationMetric;
      else
        throw std::invalid_argument("config: unknown snapshot_on '" + s + "'");
    }
    if (t.contains("batch_size") && !t["batch_size"].is_string()) {
      cfg.train.batch_size = t["batch_size"].get<std::size_t>();
      cfg.auto_batch = false;
    }  // the string "auto" keeps the min(500, 20%) rule
  }
  cfg.threads = j.value("threads", std::size_t{1});
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path, std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  if (config_hash) *config_hash = fnv1a_hex(content);
  json j;
  try {
    j = json::parse(content);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: malformed JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string TrialResult::key() const {
  return dataset + "|" + std::to_string(depth) + "|" + scheme + "|" + std::to_string(seed);
}

json trial_to_json(const TrialResult& t) {
  return json{{"dataset", t.dataset},
              {"depth", t.depth},
              {"scheme", t.scheme},
              {"seed", t.seed},
              {"repeat", t.repeat},
              {"init_seconds", t.init_seconds},
              {"train_seconds", t.train_seconds},
              {"test_metric", t.test_metric},
              {"best_epoch", t.best_epoch},
              {"init_val_loss", t.init_val_loss},
              {"divergent", t.divergent},
              {"failed", t.failed},
              {"error", t.error},
              {"train_loss", t.train_loss},
              {"val_loss", t.val_loss},
              {"val_metric", t.val_metric}};
}

TrialResult trial_from_json(const json& j) {
  TrialResult t;
  t.dataset = j.at("dataset").get<std::string>();
  t.depth = j.at("depth").get<std::size_t>();
  t.scheme = j.at("scheme").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.repeat = j.at("repeat").get<std::size_t>();
  t.init_seconds = j.at("init_seconds").get<double>();
  t.train_seconds = j.at("train_seconds").get<double>();
  t.test_metric = j.at("test_metric").get<double>();
  t.best_epoch = j.at("best_epoch").get<std::size_t>();
  t.init_val_loss = j.value("init_val_loss", 0.0);
  t.divergent = j.at("divergent").get<bool>();
  t.failed = j.at("failed").get<bool>();
  t.error = j.value("error", std::string());
  t.train_loss = j.at("train_loss").get<std::vector<double>>();
  t.val_loss = j.at("val_loss").get<std::vector<double>>();
  t.val_metric = j.at("val_metric").get<std::vector<double>>();
  return t;
}

std::size_t effective_width(std::optional<std::size_t> width, std::size_t d) {
  return width ? *width : std::min<std::size_t>(d, 20);
}

TrialResult run_single_trial(const RawTable& raw, const DatasetConfig& dc,
                             std::size_t depth, const InitScheme& scheme,
                             std::uint64_t seed, std::size_t repeat,
                             const ExperimentConfig& config) {
  using clock = std::chrono::steady_clock;
  TrialResult tr;
  tr.dataset = dc.id;
  tr.depth = depth;
  tr.scheme = scheme.id();
  tr.seed = seed;
  tr.repeat = repeat;

  const Split split = make_split(raw.n_rows, seed);
  const Dataset ds = preprocess(raw, dc.task, split.train_idx);

  const DenseMatrix x_tr = take_rows(ds.x, split.train_idx);
  const std::vector<double> y_tr = take(ds.y, split.train_idx);
  const DenseMatrix x_val = take_rows(ds.x, split.val_idx);
  const std::vector<double> y_val = take(ds.y, split.val_idx);
  const DenseMatrix x_te = take_rows(ds.x, split.test_idx);
  const std::vector<double> y_te = take(ds.y, split.test_idx);

  Architecture arch;
  arch.input_dim = ds.x.cols;
  arch.hidden_widths.assign(depth, effective_width(config.width, ds.x.cols));
  arch.hidden_activation = config.hidden_activation;
  arch.output_activation =
      dc.task == Task::Regression ? Activation::Identity : Activation::Sigmoid;

  const InitData init_data{x_tr, y_tr, x_val, y_val, dc.task};
  Rng rng(mix64(seed) ^ 0x696e6974ull);

  const auto t0 = clock::now();
  const NetworkParams init_params = init_network(arch, scheme, init_data, rng);
  tr.init_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  tr.init_val_loss = evaluate_loss(init_params, x_val, y_val, arch, dc.task);

  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.batch_size = config.auto_batch ? capped_batch_size(x_tr.rows) : tc.batch_size;

  const TrainData train_data{x_tr, y_tr, x_val, y_val, dc.task};
  const auto t1 = clock::now();
  const TrainedModel model = train(init_params, train_data, arch, tc);
  tr.train_seconds = std::chrono::duration<double>(clock::now() - t1).count();

  tr.divergent = model.divergent;
  tr.best_epoch = model.best_epoch;
  for (const auto& rec : model.trajectory) {
    tr.train_loss.push_back(rec.train_loss);
    tr.val_loss.push_back(rec.val_loss);
    tr.val_metric.push_back(rec.val_metric);
  }
  if (!model.divergent)
    tr.test_metric = evaluate_metric(model.best_params, x_te, y_te, arch, dc.task);
  return tr;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials,
                                    const ExperimentConfig& config) {
  // Group in config order: dataset, depth, scheme.
  std::vector<AggregateRow> rows;
  for (const auto& dc : config.datasets) {
    for (std::size_t depth : config.depths) {
      for (const auto& scheme : config.schemes) {
        AggregateRow row;
        row.dataset = dc.id;
        row.depth = depth;
        row.scheme = scheme.id();
        row.task = dc.task;

        std::vector<const TrialResult*> ok;
        for (const auto& t : trials) {
          if (t.dataset != dc.id || t.depth != depth || t.scheme != row.scheme) continue;
          if (t.failed || t.divergent) {
            ++row.n_failed;
            continue;
          }
          ok.push_back(&t);
        }
        std::sort(ok.begin(), ok.end(), [](const TrialResult* a, const TrialResult* b) {
          return a->seed < b->seed;
        });
        row.n_ok = ok.size();
        if (!ok.empty()) {
          double mean = 0.0;
          for (const auto* t : ok) mean += t->test_metric;
          mean /= static_cast<double>(ok.size());
          double var = 0.0;
          for (const auto* t : ok) {
            const double d = t->test_metric - mean;
            var += d * d;
          }
          row.metric_mean = mean;
          row.metric_std =
              ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;

          std::size_t max_len = 0;
          for (const auto* t : ok) max_len = std::max(max_len, t->train_loss.size());
          row.mean_train_loss.assign(max_len, 0.0);
          for (std::size_t e = 0; e < max_len; ++e) {
            double s = 0.0;
            std::size_t cnt = 0;
            for (const auto* t : ok)
              if (e < t->train_loss.size()) {
                s += t->train_loss[e];
                ++cnt;
              }
            row.mean_train_loss[e] = cnt ? s / static_cast<double>(cnt) : 0.0;
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                std::size_t threads, const std::string& config_hash) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string log_path = out_dir + "/results.jsonl";

  // Resume: collect keys of trials already persisted under this config.
  std::map<std::string, TrialResult> done;
  if (fs::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("config_hash", std::string()) != config_hash)
        throw std::runtime_error(
            "results.jsonl in " + out_dir +
            " was produced by a different config; use a fresh output directory");
      TrialResult t = trial_from_json(j);
      done[t.key()] = std::move(t);
    }
  }

  struct Pending {
    std::size_t dataset_idx;
    std::size_t depth;
    std::size_t scheme_idx;
    std::uint64_t seed;
    std::size_t repeat;
  };
  std::vector<Pending> pending;
  std::vector<TrialResult> results;
  for (std::size_t di = 0; di < config.datasets.size(); ++di) {
    for (std::size_t depth : config.depths) {
      for (std::size_t si = 0; si < config.schemes.size(); ++si) {
        for (std::size_t r = 0; r < config.repeats; ++r) {
          const std::uint64_t seed = config.seed_base + r;
          TrialResult probe;
          probe.dataset = config.datasets[di].id;
          probe.depth = depth;
          probe.scheme = config.schemes[si].id();
          probe.seed = seed;
          auto it = done.find(probe.key());
          if (it != done.end())
            results.push_back(it->second);
          else
            pending.push_back({di, depth, si, seed, r});
        }
      }
    }
  }

  // Each dataset's CSV is parsed once and shared read-only by the workers.
  std::vector<RawTable> raws;
  raws.reserve(config.datasets.size());
  for (const auto& dc : config.datasets) raws.push_back(load_csv(dc.path, dc.schema));

  std::mutex sink_mutex;
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("run_experiment: cannot write " + log_path);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const Pending& p = pending[i];
      const DatasetConfig& dc = config.datasets[p.dataset_idx];
      TrialResult tr;
      try {
        tr = run_single_trial(raws[p.dataset_idx], dc, p.depth,
                              config.schemes[p.scheme_idx], p.seed, p.repeat, config);
      } catch (const std::exception& e) {
        tr.dataset = dc.id;
        tr.depth = p.depth;
        tr.scheme = config.schemes[p.scheme_idx].id();
        tr.seed = p.seed;
        tr.repeat = p.repeat;
        tr.failed = true;
        tr.error = e.what();
      }
      json j = trial_to_json(tr);
      j["config_hash"] = config_hash;
      std::lock_guard<std::mutex> lock(sink_mutex);
      log << j.dump() << "\n";
      log.flush();
      results.push_back(std::move(tr));
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, pending.size()));
  if (n_threads <= 1 || pending.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Deterministic order regardless of completion interleaving.
  std::sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
    return a.key() < b.key();
  });

  ExperimentReport report;
  report.config_hash = config_hash;
  report.threads = threads;
  report.trials = std::move(results);
  report.aggregates = aggregate(report.trials, config);
  return report;
}

namespace {

std::string format_cell(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f±%.4f", mean, std);
  return buf;
}

}  // namespace

void emit_report(const ExperimentReport& report, const ExperimentConfig& config,
                 const std::string& out_dir, ReportFormat format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (!fs::is_directory(out_dir))
    throw std::runtime_error("emit_report: unwritable output directory " + out_dir);

  if (format == ReportFormat::Json) {
    json j;
    j["version"] = report.version;
    j["config_hash"] = report.config_hash;
    j["threads"] = report.threads;
    j["trials"] = json::array();
    for (const auto& t : report.trials) j["trials"].push_back(trial_to_json(t));
    j["aggregates"] = json::array();
    for (const auto& a : report.aggregates)
      j["aggregates"].push_back(json{{"dataset", a.dataset},
                                     {"depth", a.depth},
                                     {"scheme", a.scheme},
                                     {"task", to_string(a.task)},
                                     {"metric_mean", a.metric_mean},
                                     {"metric_std", a.metric_std},
                                     {"n_ok", a.n_ok},
                                     {"n_failed", a.n_failed},
                                     {"mean_train_loss", a.mean_train_loss}});
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw std::runtime_error("emit_report: cannot write report.json");
    out << j.dump(2) << "\n";
    return;
  }

  // One metric table per task, rows = dataset x depth, columns = schemes.
  for (Task task : {Task::Regression, Task::BinaryClassification}) {
    const std::string name = task == Task::Regression ? "metrics_regression.csv"
                                                      : "metrics_classification.csv";
    std::ofstream out(out_dir + "/" + name);
    if (!out) throw std::runtime_error("emit_report: cannot write " + name);
    out << "dataset,depth";
    for (const auto& s : config.schemes) out << "," << s.id();
    out << "\n";
    for (const auto& dc : config.datasets) {
      if (dc.task != task) continue;
      for (std::size_t depth : config.depths) {
        out << dc.id << "," << depth;
        for (const auto& s : config.schemes) {
          const std::string sid = s.id();
          auto it = std::find_if(report.aggregates.begin(), report.aggregates.end(),
                                 [&](const AggregateRow& a) {
                                   return a.dataset == dc.id && a.depth == depth &&
                                          a.scheme == sid;
                                 });
          out << ",";
          if (it != report.aggregates.end() && it->n_ok > 0)
            out << format_cell(it->metric_mean, it->metric_std);
        }
        out << "\n";
      }
    }
  }

  // Trajectory files: (epoch, scheme, mean training loss).
  for (const auto& dc : config.datasets) {
    for (std::size_t depth : config.depths) {
      std::ofstream out(out_dir + "/trajectory_" + dc.id + "_" + std::to_string(depth) +
                        ".csv");
      if (!out) throw std::runtime_error("emit_report: cannot write trajectory csv");
      out << "epoch,scheme,mean_train_loss\n";
      for (const auto& a : report.aggregates) {
        if (a.dataset != dc.id || a.depth != depth) continue;
        for (std::size_t e = 0; e < a.mean_train_loss.size(); ++e) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", a.mean_train_loss[e]);
          out << (e + 1) << "," << a.scheme << "," << buf << "\n";
        }
      }
    }
  }
}

std::size_t resolve_threads(std::optional<std::size_t> cli_threads,
                            const ExperimentConfig& config) {
  if (cli_threads) return std::max<std::size_t>(1, *cli_threads);
  if (const char* env = std::getenv("STEINIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, config.threads);
}

json params_to_json(const NetworkParams& params, const Architecture& arch) {
  json j;
  j["arch"] = {{"input_dim", arch.input_dim},
               {"hidden_widths", arch.hidden_widths},
               {"hidden_activation", to_string(arch.hidden_activation)},
               {"output_activation", to_string(arch.output_activation)}};
  j["weights"] = json::array();
  for (const auto& w : params.weights)
    j["weights"].push_back(json{{"rows", w.rows}, {"cols", w.cols}, {"data", w.data}});
  j["biases"] = params.biases;
  j["output_weights"] = params.output_weights.data;
  j["output_bias"] = params.output_bias;
  return j;
}

void params_from_json(const json& j, NetworkParams* params, Architecture* arch) {
  arch->input_dim = j.at("arch").at("input_dim").get<std::size_t>();
  arch->hidden_widths = j.at("arch").at("hidden_widths").get<std::vector<std::size_t>>();
  arch->hidden_activation =
      activation_from_string(j.at("arch").at("hidden_activation").get<std::string>());
  arch->output_activation =
      activation_from_string(j.at("arch").at("output_activation").get<std::string>());

  params->weights.clear();
  for (const auto& w : j.at("weights")) {
    DenseMatrix m(w.at("rows").get<std::size_t>(), w.at("cols").get<std::size_t>());
    m.data = w.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
      throw std::runtime_error("params file: weight data length mismatch");
    params->weights.push_back(std::move(m));
  }
  params->biases = j.at("biases").get<std::vector<std::vector<double>>>();
  params->output_weights =
      DenseMatrix(j.at("output_weights").get<std::vector<double>>().size(), 1);
  params->output_weights.data = j.at("output_weights").get<std::vector<double>>();
  params->output_bias = j.at("output_bias").get<double>();
  params->require_shapes(*arch);
}

}  // namespace steinglm
