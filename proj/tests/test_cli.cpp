// Drives the built binary as a subprocess: exit codes, file outputs, and the
// cross-command consistency between `bench`, `init`, and `eval`.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code;
  std::string out;
};

CmdResult run_cmd(const std::string& args) {
  const std::string cmd = std::string(STEINGLM_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "steinglm_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli: unknown flag exits 2 with usage text") {
  const CmdResult r = run_cmd("bench --definitely-not-a-flag");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: missing subcommand exits 2") {
  const CmdResult r = run_cmd("");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli synth: identical files under the same seed") {
  const fs::path dir = work_dir();
  const std::string a = (dir / "synth_a.csv").string();
  const std::string b = (dir / "synth_b.csv").string();
  CHECK(run_cmd("synth --kind multi-index --dim 6 --k 2 --n 200 --seed 11 --out " + a)
            .exit_code == 0);
  CHECK(run_cmd("synth --kind multi-index --dim 6 --k 2 --n 200 --seed 11 --out " + b)
            .exit_code == 0);
  const std::string ca = slurp(a);
  CHECK(!ca.empty());
  CHECK(ca == slurp(b));

  const std::string c = (dir / "synth_c.csv").string();
  CHECK(run_cmd("synth --kind multi-index --dim 6 --k 2 --n 200 --seed 12 --out " + c)
            .exit_code == 0);
  CHECK(ca != slurp(c));
}

TEST_CASE("cli synth: meta file carries the planted projection") {
  const fs::path dir = work_dir();
  const std::string csv = (dir / "synth_m.csv").string();
  const std::string meta = (dir / "synth_m.json").string();
  CHECK(run_cmd("synth --kind multi-index --dim 5 --k 3 --n 50 --seed 3 --out " + csv +
                " --meta " + meta)
            .exit_code == 0);
  const json m = json::parse(slurp(meta));
  CHECK(m["planted_b_rows"] == 5);
  CHECK(m["planted_b_cols"] == 3);
  CHECK(m["planted_b"].size() == 15);
  CHECK(m["coefficients"].size() == 3);
}

TEST_CASE("cli: bench -> init -> eval cross-command consistency") {
  const fs::path dir = work_dir();
  const std::string csv = (dir / "bench_data.csv").string();
  REQUIRE(run_cmd("synth --kind multi-index --dim 5 --k 2 --n 400 --seed 5 --out " + csv)
              .exit_code == 0);

  // Schema for the synth output (x1..x5 numeric, y response).
  json schema;
  schema["task"] = "regression";
  json cols = json::array();
  for (int i = 1; i <= 5; ++i)
    cols.push_back({{"name", "x" + std::to_string(i)}, {"kind", "numeric"}});
  cols.push_back({{"name", "y"}, {"kind", "response"}});
  schema["columns"] = cols;
  const std::string schema_path = (dir / "bench_schema.json").string();
  std::ofstream(schema_path) << schema.dump();

  json cfg;
  cfg["seed_base"] = 42;
  cfg["repeats"] = 1;
  cfg["depths"] = {2};
  cfg["width"] = 4;
  json ds;
  ds["id"] = "synth5";
  ds["path"] = csv;
  ds["task"] = "regression";
  ds["schema"]["columns"] = cols;
  cfg["datasets"] = json::array({ds});
  cfg["schemes"] = json::array({{{"hidden", "stein"}, {"output", "glm"}}});
  cfg["train"] = {{"max_epochs", 2}, {"batch_size", 64}, {"learning_rate", 0.001}};
  const std::string cfg_path = (dir / "bench_cfg.json").string();
  std::ofstream(cfg_path) << cfg.dump();

  const std::string out_dir = (dir / "bench_out").string();
  fs::remove_all(out_dir);
  const CmdResult bench = run_cmd("bench --config " + cfg_path + " --out " + out_dir);
  CHECK(bench.exit_code == 0);
  CHECK(fs::exists(out_dir + "/report.json"));
  CHECK(fs::exists(out_dir + "/results.jsonl"));
  CHECK(fs::exists(out_dir + "/metrics_regression.csv"));
  CHECK(fs::exists(out_dir + "/trajectory_synth5_2.csv"));

  const json report = json::parse(slurp(out_dir + "/report.json"));
  REQUIRE(report["trials"].size() == 1);
  const double bench_init_val_loss = report["trials"][0]["init_val_loss"].get<double>();

  const std::string dump = (dir / "params.json").string();
  const CmdResult init =
      run_cmd("init --dataset " + csv + " --schema " + schema_path +
              " --depth 2 --width 4 --scheme stein+glm --seed 42 --dump " + dump);
  CHECK(init.exit_code == 0);

  const CmdResult eval = run_cmd("eval --params " + dump + " --dataset " + csv +
                                 " --schema " + schema_path + " --split val");
  CHECK(eval.exit_code == 0);
  const json ev = json::parse(eval.out);
  CHECK(ev["loss"].get<double>() == doctest::Approx(bench_init_val_loss).epsilon(1e-12));
  CHECK(ev["metric_name"] == "rmse");
}

TEST_CASE("cli bench: nonexistent config is a usage error (exit 2)") {
  const CmdResult r = run_cmd("bench --config /nonexistent/steinglm.json");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("error:") != std::string::npos);
}

TEST_CASE("cli bench: smoke config on the bundled datasets") {
  const fs::path dir = work_dir();
  const std::string out_dir = (dir / "smoke_out").string();
  fs::remove_all(out_dir);

  // Abbreviated smoke run: both bundled datasets, one scheme, two epochs.
  json cfg = json::parse(slurp(std::string(STEINGLM_SOURCE_DIR) + "/configs/smoke.json"));
  cfg["train"]["max_epochs"] = 2;
  cfg["schemes"] = json::array({{{"hidden", "stein"}, {"output", "glm"}}});
  for (auto& ds : cfg["datasets"])
    ds["path"] = std::string(STEINGLM_SOURCE_DIR) + "/" + ds["path"].get<std::string>();
  const std::string cfg_path = (dir / "smoke_cfg.json").string();
  std::ofstream(cfg_path) << cfg.dump();

  const CmdResult r = run_cmd("bench --config " + cfg_path + " --out " + out_dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out_dir + "/report.json"));
  CHECK(fs::exists(out_dir + "/metrics_classification.csv"));
  const json report = json::parse(slurp(out_dir + "/report.json"));
  CHECK(report["trials"].size() == 2);
  for (const auto& t : report["trials"]) CHECK(t["failed"] == false);
  fs::remove_all(out_dir);
}

TEST_CASE("cli idx: converts and the artifacts reload") {
  const fs::path dir = work_dir();
  const std::string ipath = (dir / "digits.idx3").string();
  const std::string lpath = (dir / "digits.idx1").string();
  {
    std::ofstream out(ipath, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0, 4};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (int i = 0; i < 48; ++i) {
      const unsigned char px = static_cast<unsigned char>((i * 37) % 256);
      out.write(reinterpret_cast<const char*>(&px), 1);
    }
  }
  {
    std::ofstream out(lpath, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 3};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const unsigned char labels[] = {0, 1, 1};
    out.write(reinterpret_cast<const char*>(labels), 3);
  }
  const std::string oi = (dir / "digits.raw").string();
  const std::string ol = (dir / "digits_labels.raw").string();
  const CmdResult r = run_cmd("idx --images " + ipath + " --labels " + lpath +
                              " --out-images " + oi + " --out-labels " + ol);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(oi));
  CHECK(fs::exists(ol));
}
