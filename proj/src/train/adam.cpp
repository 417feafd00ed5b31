#include "train/adam.hpp"

#include <cmath>

#include "core/error.hpp"

namespace mf {

Adam::Adam(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.count());
  for (const auto& [name, t] : params.entries()) {
    m_.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
  }
}

void Adam::step(ParamStore& params, double lr, double clip_norm) {
  const auto& entries = params.entries();
  if (entries.size() != m_.size())
    throw ContractError("optimizer state does not match parameter store");

  double grad_scale = 1.0;
  if (clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, t] : entries) {
      if (!t.has_grad()) continue;
      for (double g : t.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) grad_scale = clip_norm / norm;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor t = entries[i].second;
    auto& m = m_[i];
    auto& v = v_[i];
    const double* g = t.has_grad() ? t.grad().data() : nullptr;
    double* w = t.data();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double gj = g ? g[j] * grad_scale : 0.0;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::restore(long long step_count, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw ContractError("optimizer restore: moment count mismatch");
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
      throw ContractError("optimizer restore: moment size mismatch");
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

double warmup_lr(long long step, int d_model, int warmup_steps, double scale) {
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return scale * std::pow(static_cast<double>(d_model), -0.5) *
         std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

}  // namespace mf
