#pragma once

#include <string>

#include "core/error.hpp"

namespace mf {

enum class ModelKind { Transformer, Universal, AdaptiveUniversal };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Transformer: return "t";
    case ModelKind::Universal: return "ut";
    case ModelKind::AdaptiveUniversal: return "aut";
  }
  return "?";
}

inline ModelKind model_kind_from_name(const std::string& name) {
  if (name == "t") return ModelKind::Transformer;
  if (name == "ut") return ModelKind::Universal;
  if (name == "aut") return ModelKind::AdaptiveUniversal;
  throw ConfigError("unknown model kind '" + name + "' (expected t, ut or aut)");
}

// Architecture hyperparameters shared by all three variants.
struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_layers = 2;
  int d_ffn = 128;
  double dropout = 0.1;
  int vocab_size = 20;
  int max_in = 20;
  int max_out = 10;
  int pad_id = 0;

  void validate() const {
    if (d_model <= 0 || n_heads <= 0 || n_layers <= 0 || d_ffn <= 0)
      throw ConfigError("model dimensions must be positive");
    if (d_model % n_heads != 0)
      throw ConfigError("d_model " + std::to_string(d_model) +
                        " not divisible by n_heads " + std::to_string(n_heads));
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must be in [0, 1)");
    if (vocab_size <= 0 || max_in <= 0 || max_out <= 0)
      throw ConfigError("vocab_size/max_in/max_out must be positive");
    if (pad_id < 0 || pad_id >= vocab_size)
      throw ConfigError("pad_id outside vocabulary");
  }
};

// Depth recurrence settings for the universal variants.
struct UTConfig {
  int fixed_steps = 6;      // used when act_enabled is false
  bool act_enabled = false;
  double epsilon = 0.01;    // halting threshold is 1 - epsilon
  int max_updates = 24;
  double ponder_tau = 0.0;  // weight of the optional N(t)+R(t) loss term

  void validate() const {
    if (fixed_steps < 1) throw ConfigError("fixed_steps must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw ConfigError("epsilon must be strictly between 0 and 1");
    if (max_updates < 1) throw ConfigError("max_updates must be >= 1");
    if (ponder_tau < 0.0) throw ConfigError("ponder_tau must be >= 0");
  }
};

}  // namespace mf
