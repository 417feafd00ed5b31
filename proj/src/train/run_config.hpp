#pragma once

#include <cstdint>
#include <string>

#include "data/generator.hpp"
#include "model/config.hpp"

namespace mf {

struct TrainConfig {
  long long steps = 20000;
  int batch_size = 128;
  int warmup_steps = 4000;
  double lr_scale = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  std::uint64_t seed = 1;
  long long checkpoint_every = 0;  // 0 = final checkpoint only
  long long eval_every = 1000;     // 0 = no periodic eval
  int eval_samples = 1000;         // held-out slice size, 0 = full test split
  double label_smoothing = 0.0;
  double clip_norm = 1.0;          // 0 = no clipping

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  UTConfig ut;
  TrainConfig train;
};

// Config files are JSON objects with optional "model", "ut" and "train"
// sections (missing fields keep their defaults); a dataset config is a JSON
// object with a "dataset" section. Unknown keys anywhere are rejected.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json_text(const std::string& text);
DatasetConfig load_dataset_config(const std::string& path);
DatasetConfig dataset_config_from_json_text(const std::string& text);

}  // namespace mf
