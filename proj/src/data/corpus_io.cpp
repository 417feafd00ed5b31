#include "data/corpus_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/error.hpp"

namespace mf {

namespace fs = std::filesystem;
using nlohmann::json;

void write_samples_tsv(const std::string& path,
                       const std::vector<ExprSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& s : samples) {
    out << s.input_text << '\t' << s.target_text << '\t'
        << expr_type_name(s.expr_type) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<ExprSample> read_samples_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ExprSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    ExprSample s;
    s.input_text = line.substr(0, tab1);
    s.target_text = line.substr(tab1 + 1, tab2 - tab1 - 1);
    s.expr_type = expr_type_from_name(line.substr(tab2 + 1));
    samples.push_back(std::move(s));
  }
  return samples;
}

namespace {

json config_to_json(const DatasetConfig& c) {
  return json{{"value_lo", c.value_lo},
              {"value_hi", c.value_hi},
              {"ops", c.ops},
              {"sample_count", c.sample_count},
              {"split_ratio", c.split_ratio},
              {"seed", c.seed}};
}

DatasetConfig config_from_json(const json& j) {
  DatasetConfig c;
  c.value_lo = j.at("value_lo").get<long long>();
  c.value_hi = j.at("value_hi").get<long long>();
  c.ops = j.at("ops").get<std::string>();
  c.sample_count = j.at("sample_count").get<long long>();
  c.split_ratio = j.at("split_ratio").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json type_counts_json(const std::array<long long, kNumExprTypes>& counts) {
  json out = json::object();
  for (int i = 0; i < kNumExprTypes; ++i)
    out[expr_type_name(static_cast<ExprType>(i))] = counts[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds,
                   const DatasetConfig* config,
                   const ObfuscationMap* applied_map) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  write_samples_tsv(dir + "/train.tsv", ds.train);
  write_samples_tsv(dir + "/test.tsv", ds.test);

  std::size_t max_in = 0, max_tgt = 0;
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& s : *split) {
      max_in = std::max(max_in, s.input_text.size());
      max_tgt = std::max(max_tgt, s.target_text.size());
    }

  json meta{{"counts",
             {{"train", ds.train.size()},
              {"test", ds.test.size()},
              {"train_per_type", type_counts_json(ds.train_type_counts)},
              {"test_per_type", type_counts_json(ds.test_type_counts)}}},
            {"max_input_len", max_in},
            {"max_target_len", max_tgt}};
  if (config) meta["config"] = config_to_json(*config);
  if (applied_map) {
    json m = json::object();
    for (auto [from, to] : applied_map->mapping())
      m[std::string(1, from)] = std::string(1, to);
    meta["obfuscation_map"] = m;
  }
  std::ofstream out(dir + "/meta.json", std::ios::binary);
  if (!out) throw IoError("cannot open " + dir + "/meta.json for writing");
  out << meta.dump(2) << '\n';
}

LoadedCorpus load_corpus(const std::string& dir) {
  LoadedCorpus c;
  c.train = read_samples_tsv(dir + "/train.tsv");
  c.test = read_samples_tsv(dir + "/test.tsv");
  if (fs::exists(dir + "/meta.json")) {
    std::ifstream in(dir + "/meta.json", std::ios::binary);
    json meta;
    try {
      in >> meta;
      if (meta.contains("config")) c.config = config_from_json(meta.at("config"));
    } catch (const json::exception& e) {
      throw ParseError(dir + "/meta.json: " + e.what());
    }
  }
  return c;
}

ObfuscationMap read_obfuscation_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": expected a JSON object");
  std::map<char, char> m;
  for (auto& [key, value] : j.items()) {
    std::string v = value.get<std::string>();
    if (key.size() != 1 || v.size() != 1)
      throw ParseError(path + ": keys and values must be single characters");
    m[key[0]] = v[0];
  }
  return ObfuscationMap(std::move(m));
}

void write_obfuscation_map(const std::string& path, const ObfuscationMap& map) {
  json j = json::object();
  for (auto [from, to] : map.mapping())
    j[std::string(1, from)] = std::string(1, to);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace mf
