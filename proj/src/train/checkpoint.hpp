#pragma once

#include <memory>
#include <string>

#include "model/transformer.hpp"
#include "train/adam.hpp"

namespace mf {

// Single binary file: "MFCK" magic, version, model kind and configs, step
// counter, seed, parameters and (when present) Adam moments. All floats are
// little-endian IEEE-754 doubles.
struct CheckpointMeta {
  long long step = 0;
  std::uint64_t seed = 0;
  double running_loss = 0.0;
};

void save_checkpoint(const std::string& path, const TransformerModel& model,
                     const Adam* optimizer, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::unique_ptr<TransformerModel> model;
  CheckpointMeta meta;
  bool has_optimizer = false;
  long long adam_step = 0;
  std::vector<std::vector<double>> adam_m;
  std::vector<std::vector<double>> adam_v;

  // Builds an Adam instance carrying the stored moments.
  std::unique_ptr<Adam> make_optimizer(const AdamConfig& cfg) const;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace mf
