#pragma once

#include <vector>

#include "model/params.hpp"

namespace mf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Adam with bias correction. Moment vectors follow ParamStore registration
// order; a missing gradient buffer counts as an all-zero gradient.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig cfg);

  // Applies one update from the accumulated gradients. clip_norm > 0 rescales
  // all gradients so their global L2 norm is at most clip_norm.
  void step(ParamStore& params, double lr, double clip_norm);

  long long step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

  // Checkpoint access; sizes must match the param store exactly.
  const std::vector<std::vector<double>>& moments_m() const { return m_; }
  const std::vector<std::vector<double>>& moments_v() const { return v_; }
  void restore(long long step_count, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  AdamConfig cfg_;
  long long step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Base-transformer warmup schedule:
// lr = scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), 1-based.
double warmup_lr(long long step, int d_model, int warmup_steps, double scale);

}  // namespace mf
