#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("MF_CLI_BIN");
  REQUIRE_MESSAGE(p != nullptr, "MF_CLI_BIN must point at the CLI binary");
  return p;
}

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const std::string out_file = (fs::temp_directory_path() / "mf_cli_out.txt").string();
  const std::string err_file = (fs::temp_directory_path() / "mf_cli_err.txt").string();
  const std::string cmd = cli_path() + " " + args + " >" + out_file + " 2>" + err_file;
  int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string tmp(const std::string& name) {
  std::string p = (fs::temp_directory_path() / name).string();
  fs::remove_all(p);
  return p;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_CASE("unknown flags exit 1 with usage text on stderr") {
  RunResult r = run_cli("--definitely-not-a-flag");
  CHECK(r.exit_code == 1);
  CHECK(!r.err.empty());

  RunResult sub = run_cli("train --nope");
  CHECK(sub.exit_code == 1);
  CHECK(!sub.err.empty());
}

TEST_CASE("oracle subcommand prints the result") {
  RunResult r = run_cli("oracle x=85,y=-523,x*y");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "-44455\n");

  RunResult bad = run_cli("oracle x=85");
  CHECK(bad.exit_code == 2);
  CHECK(!bad.err.empty());
}

TEST_CASE("generate, train, eval, attend pipeline") {
  std::string data_dir = tmp("mf_cli_data");
  std::string gen_cfg = tmp("mf_cli_gen.json");
  write_text(gen_cfg, R"({"dataset": {"value_lo": 0, "value_hi": 10,
    "sample_count": 50, "split_ratio": 0.8, "seed": 11}})");
  CHECK(run_cli("generate --config " + gen_cfg + " --out " + data_dir).exit_code == 0);
  CHECK(fs::exists(data_dir + "/train.tsv"));

  std::string run_cfg = tmp("mf_cli_run.json");
  write_text(run_cfg, R"({
    "model": {"d_model": 16, "n_heads": 2, "d_ffn": 16, "dropout": 0.0,
              "max_in": 12, "max_out": 6},
    "train": {"steps": 3, "batch_size": 8, "eval_every": 0, "seed": 2}
  })");
  std::string out_dir = tmp("mf_cli_out_t");
  CHECK(run_cli("train --kind aut --data " + data_dir + " --config " + run_cfg +
                " --out " + out_dir).exit_code == 0);
  REQUIRE(fs::exists(out_dir + "/model.ckpt"));

  // an untrained 3-step model: the pipeline runs, accuracy is near zero
  std::string report = tmp("mf_cli_report.json");
  CHECK(run_cli("eval --model " + out_dir + "/model.ckpt --data " + data_dir +
                " --report " + report).exit_code == 0);
  {
    std::ifstream in(report);
    json j;
    in >> j;
    CHECK(j.at("overall").get<double>() <= 0.5);
    long long count_sum = 0;
    for (const auto& [name, stat] : j.at("per_type").items())
      count_sum += stat.at("count").get<long long>();
    CHECK(count_sum == j.at("total").get<long long>());
  }

  std::string attend = tmp("mf_cli_attend.json");
  CHECK(run_cli("attend --model " + out_dir + "/model.ckpt --input x=3,y=4,x*y --out " +
                attend).exit_code == 0);
  {
    std::ifstream in(attend);
    json j;
    in >> j;
    CHECK(!j.at("act").is_null());  // the adaptive kind exports halting counts
  }

  // runtime failures exit 2
  CHECK(run_cli("eval --model /no/such.ckpt --data " + data_dir +
                " --report " + report).exit_code == 2);

  fs::remove_all(data_dir);
  fs::remove_all(out_dir);
  fs::remove(gen_cfg);
  fs::remove(run_cfg);
  fs::remove(report);
  fs::remove(attend);
}

TEST_CASE("obfuscate subcommand") {
  std::string data_dir = tmp("mf_cli_obf_data");
  std::string gen_cfg = tmp("mf_cli_obf_gen.json");
  write_text(gen_cfg, R"({"dataset": {"value_lo": 0, "value_hi": 5,
    "sample_count": 30, "seed": 3}})");
  REQUIRE(run_cli("generate --config " + gen_cfg + " --out " + data_dir).exit_code == 0);

  std::string map = tmp("mf_cli_map.json");
  write_text(map, R"({"0":"5","1":"6","2":"7","3":"8","4":"9","5":"0",
    "6":"1","7":"2","8":"3","9":"4","-":"-","+":"+","*":"*","=":"=",
    ",":",","x":"x","y":"y"})");
  std::string obf_dir = tmp("mf_cli_obf_out");
  CHECK(run_cli("obfuscate --map " + map + " --in " + data_dir + " --out " +
                obf_dir).exit_code == 0);
  CHECK(fs::exists(obf_dir + "/train.tsv"));

  std::ifstream a(data_dir + "/train.tsv"), b(obf_dir + "/train.tsv");
  std::string line_a, line_b;
  std::getline(a, line_a);
  std::getline(b, line_b);
  CHECK(line_a.size() == line_b.size());
  CHECK(line_a != line_b);

  fs::remove_all(data_dir);
  fs::remove_all(obf_dir);
  fs::remove(gen_cfg);
  fs::remove(map);
}
