// Command-line front end: experiment sweeps, one-off initialization dumps,
// model scoring, synthetic data generation, and IDX conversion.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "steinglm/conv.hpp"
#include "steinglm/harness.hpp"

namespace {

using namespace steinglm;
using nlohmann::json;

struct SchemaFile {
  std::vector<ColumnSchema> schema;
  Task task;
};

SchemaFile load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open schema file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: malformed schema JSON: ") + e.what());
  }
  SchemaFile sf;
  sf.task = task_from_string(j.at("task").get<std::string>());
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
      throw std::runtime_error("config: unknown column kind '" + kind + "'");
    sf.schema.push_back(std::move(c));
  }
  return sf;
}

InitScheme parse_scheme_id(const std::string& s) {
  InitScheme scheme;
  const auto plus = s.find('+');
  if (plus == std::string::npos) {
    scheme.hidden = hidden_init_from_string(s);
    scheme.output = OutputInit::Glm;
  } else {
    scheme.hidden = hidden_init_from_string(s.substr(0, plus));
    scheme.output = output_init_from_string(s.substr(plus + 1));
  }
  return scheme;
}

int cmd_bench(const std::string& config_path, const std::string& out_override,
              std::optional<std::size_t> threads_opt) {
  std::string config_hash;
  ExperimentConfig config = load_config_file(config_path, &config_hash);
  const std::string out_dir = out_override.empty() ? config.output_dir : out_override;
  const std::size_t threads = resolve_threads(threads_opt, config);

  ExperimentReport report = run_experiment(config, out_dir, threads, config_hash);
  emit_report(report, config, out_dir, ReportFormat::Json);
  emit_report(report, config, out_dir, ReportFormat::CsvTables);

  for (const auto& a : report.aggregates) {
    std::printf("%s depth=%zu %s: %s=%.4f±%.4f (n=%zu, failed=%zu)\n", a.dataset.c_str(),
                a.depth, a.scheme.c_str(),
                a.task == Task::Regression ? "rmse" : "auc", a.metric_mean, a.metric_std,
                a.n_ok, a.n_failed);
  }
  std::printf("report written to %s (config %s, threads %zu)\n", out_dir.c_str(),
              config_hash.c_str(), threads);
  return 0;
}

int cmd_init(const std::string& dataset_path, const std::string& schema_path,
             std::size_t depth, const std::string& scheme_id, const std::string& dump_path,
             std::optional<std::size_t> width, std::uint64_t seed) {
  const SchemaFile sf = load_schema_file(schema_path);
  const RawTable raw = load_csv(dataset_path, sf.schema);
  const Split split = make_split(raw.n_rows, seed);
  const Dataset ds = preprocess(raw, sf.task, split.train_idx);

  const DenseMatrix x_tr = take_rows(ds.x, split.train_idx);
  const std::vector<double> y_tr = take(ds.y, split.train_idx);
  const DenseMatrix x_val = take_rows(ds.x, split.val_idx);
  const std::vector<double> y_val = take(ds.y, split.val_idx);

  Architecture arch;
  arch.input_dim = ds.x.cols;
  arch.hidden_widths.assign(depth, effective_width(width, ds.x.cols));
  arch.output_activation =
      sf.task == Task::Regression ? Activation::Identity : Activation::Sigmoid;

  const InitScheme scheme = parse_scheme_id(scheme_id);
  const InitData data{x_tr, y_tr, x_val, y_val, sf.task};
  Rng rng(mix64(seed) ^ 0x696e6974ull);
  const NetworkParams params = init_network(arch, scheme, data, rng);

  json j = params_to_json(params, arch);
  j["meta"] = {{"dataset", dataset_path},
               {"schema", schema_path},
               {"task", to_string(sf.task)},
               {"seed", seed},
               {"scheme", scheme.id()}};
  std::ofstream out(dump_path);
  if (!out) throw std::runtime_error("cannot write " + dump_path);
  out << j.dump(2) << "\n";
  std::printf("params for %s (depth %zu, %s) written to %s\n", dataset_path.c_str(), depth,
              scheme.id().c_str(), dump_path.c_str());
  return 0;
}

int cmd_eval(const std::string& params_path, const std::string& dataset_path,
             const std::string& schema_path, std::optional<std::uint64_t> seed_opt,
             const std::string& split_name) {
  std::ifstream in(params_path);
  if (!in) throw std::runtime_error("cannot open params file " + params_path);
  json j;
  in >> j;

  NetworkParams params;
  Architecture arch;
  params_from_json(j, &params, &arch);
  const std::uint64_t seed =
      seed_opt ? *seed_opt : j.at("meta").at("seed").get<std::uint64_t>();

  const SchemaFile sf = load_schema_file(schema_path);
  const RawTable raw = load_csv(dataset_path, sf.schema);
  const Split split = make_split(raw.n_rows, seed);
  const Dataset ds = preprocess(raw, sf.task, split.train_idx);

  std::vector<std::size_t> idx;
  if (split_name == "train")
    idx = split.train_idx;
  else if (split_name == "val")
    idx = split.val_idx;
  else if (split_name == "test")
    idx = split.test_idx;
  else if (split_name == "all")
    for (std::size_t i = 0; i < raw.n_rows; ++i) idx.push_back(i);
  else
    throw std::runtime_error("unknown split '" + split_name + "'");

  const DenseMatrix x = take_rows(ds.x, idx);
  const std::vector<double> y = take(ds.y, idx);
  const double l = evaluate_loss(params, x, y, arch, sf.task);
  const double m = evaluate_metric(params, x, y, arch, sf.task);

  json out{{"split", split_name},
           {"n", idx.size()},
           {"loss", l},
           {"metric", m},
           {"metric_name", sf.task == Task::Regression ? "rmse" : "auc"},
           {"seed", seed}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_synth(const std::string& kind, std::size_t dim, std::size_t k, std::size_t n,
              std::uint64_t seed, const std::string& out_path, const std::string& meta_path,
              const std::string& coeffs_csv) {
  if (kind != "multi-index") throw std::runtime_error("unknown synth kind '" + kind + "'");
  std::vector<double> coeffs;
  if (!coeffs_csv.empty()) {
    std::stringstream ss(coeffs_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) coeffs.push_back(std::stod(tok));
  }
  const MultiIndexData data = make_multi_index_data(dim, k, n, seed, coeffs);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  for (std::size_t j = 0; j < dim; ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[i]);
    out << buf << "\n";
  }

  if (!meta_path.empty()) {
    json meta{{"kind", kind},
              {"dim", dim},
              {"k", k},
              {"n", n},
              {"seed", seed},
              {"coefficients", data.coefficients},
              {"planted_b", data.planted_b.data},
              {"planted_b_rows", data.planted_b.rows},
              {"planted_b_cols", data.planted_b.cols}};
    std::ofstream mo(meta_path);
    if (!mo) throw std::runtime_error("cannot write " + meta_path);
    mo << meta.dump(2) << "\n";
  }
  std::printf("wrote %zu rows to %s\n", n, out_path.c_str());
  return 0;
}

int cmd_idx(const std::string& images_path, const std::string& labels_path,
            const std::string& out_images, const std::string& out_labels) {
  const ImageBatch images = read_idx_images(images_path);
  const std::vector<double> labels = read_idx_labels(labels_path);
  if (labels.size() != images.n)
    throw std::runtime_error("idx: image/label counts differ");
  write_image_batch(out_images, images);
  write_labels(out_labels, labels);
  std::printf("converted %zu images (%zux%zu) to %s / %s\n", images.n, images.height,
              images.width, out_images.c_str(), out_labels.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SteinGLM network initialization benchmark"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Run an experiment sweep from a JSON config");
  std::string config_path, out_dir;
  std::size_t threads_val = 0;
  bench->add_option("--config", config_path, "Experiment config JSON")->required();
  bench->add_option("--out", out_dir, "Output directory (overrides the config)");
  bench->add_option("--threads", threads_val, "Cap on concurrent trials");

  auto* init = app.add_subcommand("init", "Initialize a network and dump its parameters");
  std::string ds_path, schema_path, scheme_id = "stein+glm", dump_path;
  std::size_t depth = 10, width_val = 0;
  std::uint64_t seed = 0;
  init->add_option("--dataset", ds_path, "CSV dataset")->required();
  init->add_option("--schema", schema_path, "Schema JSON (columns + task)")->required();
  init->add_option("--depth", depth, "Number of hidden layers")->required();
  init->add_option("--scheme", scheme_id, "hidden[+output], e.g. stein+glm");
  init->add_option("--dump", dump_path, "Output params JSON")->required();
  init->add_option("--width", width_val, "Hidden width (default min{d,20})");
  init->add_option("--seed", seed, "Split seed");

  auto* eval = app.add_subcommand("eval", "Score a dumped model on a dataset split");
  std::string params_path, eval_ds, eval_schema, split_name = "val";
  std::uint64_t eval_seed = 0;
  bool eval_seed_set = false;
  eval->add_option("--params", params_path, "Params JSON from `init`")->required();
  eval->add_option("--dataset", eval_ds, "CSV dataset")->required();
  eval->add_option("--schema", eval_schema, "Schema JSON")->required();
  eval->add_option("--split", split_name, "train|val|test|all");
  eval->add_option("--seed", eval_seed, "Split seed (default: from the params file)")
      ->each([&](const std::string&) { eval_seed_set = true; });

  auto* synth = app.add_subcommand("synth", "Emit planted synthetic data");
  std::string kind = "multi-index", synth_out = "synth.csv", meta_path, coeffs_csv;
  std::size_t dim = 10, k = 3, n = 1000;
  std::uint64_t synth_seed = 0;
  synth->add_option("--kind", kind, "Generator kind (multi-index)");
  synth->add_option("--dim", dim, "Input dimension")->required();
  synth->add_option("--k", k, "Number of planted indices")->required();
  synth->add_option("--n", n, "Sample count")->required();
  synth->add_option("--seed", synth_seed, "RNG seed")->required();
  synth->add_option("--out", synth_out, "Output CSV path");
  synth->add_option("--meta", meta_path, "Optional JSON with the planted projection");
  synth->add_option("--coeffs", coeffs_csv, "Comma-separated link coefficients");

  auto* idx = app.add_subcommand("idx", "Convert IDX digit files to raw tensors");
  std::string idx_images, idx_labels, raw_images, raw_labels;
  idx->add_option("--images", idx_images, "IDX image file")->required();
  idx->add_option("--labels", idx_labels, "IDX label file")->required();
  idx->add_option("--out-images", raw_images, "Raw tensor output")->required();
  idx->add_option("--out-labels", raw_labels, "Raw labels output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage
    return 2;
  }

  try {
    if (bench->parsed())
      return cmd_bench(config_path, out_dir,
                       threads_val ? std::optional<std::size_t>(threads_val) : std::nullopt);
    if (init->parsed())
      return cmd_init(ds_path, schema_path, depth, scheme_id, dump_path,
                      width_val ? std::optional<std::size_t>(width_val) : std::nullopt, seed);
    if (eval->parsed())
      return cmd_eval(params_path, eval_ds, eval_schema,
                      eval_seed_set ? std::optional<std::uint64_t>(eval_seed) : std::nullopt,
                      split_name);
    if (synth->parsed())
      return cmd_synth(kind, dim, k, n, synth_seed, synth_out, meta_path, coeffs_csv);
    if (idx->parsed()) return cmd_idx(idx_images, idx_labels, raw_images, raw_labels);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    // Malformed configuration is a usage problem, not a runtime failure.
    if (what.rfind("config:", 0) == 0) {
      std::cerr << app.help() << "\n";
      return 2;
    }
    return 1;
  }
  return 0;
}
