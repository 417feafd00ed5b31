#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mathformer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

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

TEST_CASE("version and status names") {
  CHECK(std::strlen(mf_version()) > 0);
  CHECK(std::string(mf_status_name(MF_OK)) == "ok");
  CHECK(std::string(mf_status_name(MF_ERR_CAPACITY)) == "capacity");
}

TEST_CASE("oracle evaluation through the C surface") {
  char buf[32];
  REQUIRE(mf_oracle_eval("x=85,y=-523,x*y", buf, sizeof(buf)) == MF_OK);
  CHECK(std::string(buf) == "-44455");
  CHECK(std::string(mf_last_error()).empty());

  CHECK(mf_oracle_eval("x=85&y=2,x*y", buf, sizeof(buf)) == MF_ERR_PARSE);
  CHECK(std::strlen(mf_last_error()) > 0);

  CHECK(mf_oracle_eval("x=1,x=2,x+x", buf, sizeof(buf)) == MF_ERR_PARSE);

  char small[3];
  CHECK(mf_oracle_eval("x=85,y=-523,x*y", small, sizeof(small)) == MF_ERR_USAGE);
  CHECK(mf_oracle_eval(nullptr, buf, sizeof(buf)) == MF_ERR_USAGE);
}

TEST_CASE("generate maps config problems onto status codes") {
  std::string dir = tmp("mf_capi_gen");
  CHECK(mf_generate("/no/such/config.json", dir.c_str()) == MF_ERR_IO);

  std::string bad_key = tmp("mf_capi_badkey.json");
  write_text(bad_key, R"({"dataset": {"verbs": 3}})");
  CHECK(mf_generate(bad_key.c_str(), dir.c_str()) == MF_ERR_CONFIG);

  std::string overflow = tmp("mf_capi_overflow.json");
  write_text(overflow, R"({"dataset": {"value_lo": 0, "value_hi": 2, "ops": ["+"],
                           "sample_count": 100000, "seed": 1}})");
  CHECK(mf_generate(overflow.c_str(), dir.c_str()) == MF_ERR_CAPACITY);

  std::string not_json = tmp("mf_capi_notjson.json");
  write_text(not_json, "{nope");
  CHECK(mf_generate(not_json.c_str(), dir.c_str()) == MF_ERR_PARSE);
  fs::remove(bad_key);
  fs::remove(overflow);
  fs::remove(not_json);
}

TEST_CASE("full pipeline through the C API") {
  std::string data_dir = tmp("mf_capi_data");
  std::string config = tmp("mf_capi_cfg.json");
  write_text(config, R"({"dataset": {"value_lo": 0, "value_hi": 10,
    "sample_count": 60, "split_ratio": 0.8, "seed": 5}})");
  REQUIRE(mf_generate(config.c_str(), data_dir.c_str()) == MF_OK);
  CHECK(fs::exists(data_dir + "/train.tsv"));
  CHECK(fs::exists(data_dir + "/test.tsv"));
  CHECK(fs::exists(data_dir + "/meta.json"));

  std::string run_cfg = tmp("mf_capi_run.json");
  write_text(run_cfg, R"({
    "model": {"d_model": 16, "n_heads": 2, "d_ffn": 16, "dropout": 0.0,
              "max_in": 12, "max_out": 6},
    "ut": {"fixed_steps": 2},
    "train": {"steps": 3, "batch_size": 8, "eval_every": 0, "seed": 2}
  })");
  std::string out_dir = tmp("mf_capi_out");
  REQUIRE(mf_train("aut", data_dir.c_str(), run_cfg.c_str(), out_dir.c_str()) == MF_OK);
  CHECK(fs::exists(out_dir + "/model.ckpt"));
  CHECK(fs::exists(out_dir + "/metrics.csv"));

  CHECK(mf_train("gpt", data_dir.c_str(), nullptr, out_dir.c_str()) == MF_ERR_CONFIG);

  mf_model* model = nullptr;
  REQUIRE(mf_model_load((out_dir + "/model.ckpt").c_str(), &model) == MF_OK);
  REQUIRE(model != nullptr);

  char kind[8];
  REQUIRE(mf_model_kind(model, kind, sizeof(kind)) == MF_OK);
  CHECK(std::string(kind) == "aut");

  char prediction[32];
  REQUIRE(mf_model_predict(model, "x=3,y=4,x*y", prediction, sizeof(prediction)) == MF_OK);
  CHECK(std::strlen(prediction) <= 5);

  std::string report_path = tmp("mf_capi_report.json");
  REQUIRE(mf_model_evaluate(model, data_dir.c_str(), report_path.c_str()) == MF_OK);
  {
    std::ifstream in(report_path);
    json report;
    in >> report;
    CHECK(report.contains("overall"));
    long long count_sum = 0;
    for (const auto& [name, stat] : report.at("per_type").items())
      count_sum += stat.at("count").get<long long>();
    CHECK(count_sum == report.at("total").get<long long>());
  }

  std::string attend_path = tmp("mf_capi_attend.json");
  REQUIRE(mf_model_export_attention(model, "x=3,y=4,x*y", attend_path.c_str()) == MF_OK);
  {
    std::ifstream in(attend_path);
    json j;
    in >> j;
    REQUIRE(!j.at("act").is_null());
    CHECK(j.at("act").at("n_updates").size() == std::strlen("x=3,y=4,x*y"));
  }

  mf_model_free(model);
  for (const auto& p : {data_dir, out_dir}) fs::remove_all(p);
  for (const auto& p : {config, run_cfg, report_path, attend_path}) fs::remove(p);
}

TEST_CASE("model load failures") {
  mf_model* model = nullptr;
  CHECK(mf_model_load("/no/such/model.ckpt", &model) == MF_ERR_IO);
  CHECK(model == nullptr);
  CHECK(mf_model_load(nullptr, &model) == MF_ERR_USAGE);

  std::string not_ckpt = tmp("mf_capi_notckpt");
  write_text(not_ckpt, "just text");
  CHECK(mf_model_load(not_ckpt.c_str(), &model) == MF_ERR_PARSE);
  fs::remove(not_ckpt);

  mf_model_free(nullptr);  // must be a no-op
}

TEST_CASE("obfuscation through the C API round-trips") {
  std::string data_dir = tmp("mf_capi_obf_data");
  std::string config = tmp("mf_capi_obf_cfg.json");
  write_text(config, R"({"dataset": {"value_lo": 0, "value_hi": 10,
    "sample_count": 40, "seed": 9}})");
  REQUIRE(mf_generate(config.c_str(), data_dir.c_str()) == MF_OK);

  // a full-alphabet permutation and its inverse
  std::string fwd_map = tmp("mf_capi_map.json");
  std::string inv_map = tmp("mf_capi_map_inv.json");
  write_text(fwd_map, R"({"0":"1","1":"2","2":"3","3":"4","4":"5","5":"6",
    "6":"7","7":"8","8":"9","9":"0","-":"-","+":"+","*":"*","=":"=",
    ",":",","x":"y","y":"x"})");
  write_text(inv_map, R"({"1":"0","2":"1","3":"2","4":"3","5":"4","6":"5",
    "7":"6","8":"7","9":"8","0":"9","-":"-","+":"+","*":"*","=":"=",
    ",":",","y":"x","x":"y"})");

  std::string obf_dir = tmp("mf_capi_obf_out");
  std::string back_dir = tmp("mf_capi_obf_back");
  REQUIRE(mf_obfuscate(fwd_map.c_str(), data_dir.c_str(), obf_dir.c_str()) == MF_OK);
  REQUIRE(mf_obfuscate(inv_map.c_str(), obf_dir.c_str(), back_dir.c_str()) == MF_OK);

  for (const char* name : {"/train.tsv", "/test.tsv"}) {
    std::ifstream a(data_dir + name), b(back_dir + name);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
  for (const auto& p : {data_dir, obf_dir, back_dir}) fs::remove_all(p);
  for (const auto& p : {config, fwd_map, inv_map}) fs::remove(p);
}
