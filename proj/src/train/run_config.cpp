#include "train/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "core/error.hpp"

namespace mf {

using nlohmann::json;

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (lr_scale < 0.0) throw ConfigError("lr_scale must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must be in [0, 1)");
  if (adam_eps <= 0.0) throw ConfigError("adam_eps must be positive");
  if (checkpoint_every < 0 || eval_every < 0)
    throw ConfigError("checkpoint_every/eval_every must be >= 0");
  if (eval_samples < 0) throw ConfigError("eval_samples must be >= 0");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw ConfigError("label_smoothing must be in [0, 1)");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  reject_unknown(j, {"d_model", "n_heads", "n_layers", "d_ffn", "dropout",
                     "vocab_size", "max_in", "max_out", "pad_id"},
                 "model config");
  read(j, "d_model", c.d_model);
  read(j, "n_heads", c.n_heads);
  read(j, "n_layers", c.n_layers);
  read(j, "d_ffn", c.d_ffn);
  read(j, "dropout", c.dropout);
  read(j, "vocab_size", c.vocab_size);
  read(j, "max_in", c.max_in);
  read(j, "max_out", c.max_out);
  read(j, "pad_id", c.pad_id);
  c.validate();
  return c;
}

UTConfig ut_from_json(const json& j) {
  UTConfig c;
  reject_unknown(j, {"fixed_steps", "act_enabled", "epsilon", "max_updates",
                     "ponder_tau"},
                 "ut config");
  read(j, "fixed_steps", c.fixed_steps);
  read(j, "act_enabled", c.act_enabled);
  read(j, "epsilon", c.epsilon);
  read(j, "max_updates", c.max_updates);
  read(j, "ponder_tau", c.ponder_tau);
  c.validate();
  return c;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  reject_unknown(j, {"steps", "batch_size", "warmup_steps", "lr_scale", "beta1",
                     "beta2", "adam_eps", "seed", "checkpoint_every",
                     "eval_every", "eval_samples", "label_smoothing",
                     "clip_norm"},
                 "train config");
  read(j, "steps", c.steps);
  read(j, "batch_size", c.batch_size);
  read(j, "warmup_steps", c.warmup_steps);
  read(j, "lr_scale", c.lr_scale);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "seed", c.seed);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "eval_every", c.eval_every);
  read(j, "eval_samples", c.eval_samples);
  read(j, "label_smoothing", c.label_smoothing);
  read(j, "clip_norm", c.clip_norm);
  c.validate();
  return c;
}

RunConfig run_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, {"model", "ut", "train"}, "config root");
  RunConfig c;
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("ut")) c.ut = ut_from_json(j.at("ut"));
  if (j.contains("train")) c.train = train_from_json(j.at("train"));
  return c;
}

DatasetConfig dataset_from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(root, {"dataset"}, "dataset config root");
  if (!root.contains("dataset"))
    throw ConfigError("dataset config needs a \"dataset\" section");
  const json& j = root.at("dataset");
  reject_unknown(j, {"value_lo", "value_hi", "ops", "sample_count",
                     "split_ratio", "seed"},
                 "dataset config");
  DatasetConfig c;
  read(j, "value_lo", c.value_lo);
  read(j, "value_hi", c.value_hi);
  if (j.contains("ops")) {
    c.ops.clear();
    for (const auto& op : j.at("ops")) {
      std::string s = op.get<std::string>();
      if (s.size() != 1) throw ConfigError("ops entries must be single characters");
      c.ops.push_back(s[0]);
    }
  }
  read(j, "sample_count", c.sample_count);
  read(j, "split_ratio", c.split_ratio);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  return run_from_json(parse_file(path));
}

RunConfig run_config_from_json_text(const std::string& text) {
  return run_from_json(parse_text(text));
}

DatasetConfig load_dataset_config(const std::string& path) {
  return dataset_from_json(parse_file(path));
}

DatasetConfig dataset_config_from_json_text(const std::string& text) {
  return dataset_from_json(parse_text(text));
}

}  // namespace mf
