#include "model/params.hpp"

#include <cmath>

#include "core/error.hpp"

namespace mf {

Tensor ParamStore::create(const std::string& name, std::vector<int> shape,
                          Init init, Rng& rng, double const_value) {
  if (has(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  switch (init) {
    case Init::Zero:
      break;
    case Init::One:
      std::fill(t.vec().begin(), t.vec().end(), 1.0);
      break;
    case Init::Const:
      std::fill(t.vec().begin(), t.vec().end(), const_value);
      break;
    case Init::Glorot: {
      if (t.rank() != 2)
        throw ConfigError("glorot init expects a matrix for '" + name + "'");
      double limit = std::sqrt(6.0 / (t.dim(0) + t.dim(1)));
      for (double& v : t.vec()) v = rng.next_uniform(-limit, limit);
      break;
    }
  }
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw ConfigError("unknown parameter '" + name + "'");
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return true;
  return false;
}

std::int64_t ParamStore::total_values() const {
  std::int64_t total = 0;
  for (const auto& [n, t] : entries_) total += t.numel();
  return total;
}

void ParamStore::zero_grad() {
  for (auto& [n, t] : entries_) t.zero_grad();
}

LinearParams make_linear(ParamStore& store, const std::string& prefix, int in,
                         int out, Rng& rng) {
  LinearParams p;
  p.w = store.create(prefix + ".w", {in, out}, ParamStore::Init::Glorot, rng);
  p.b = store.create(prefix + ".b", {out}, ParamStore::Init::Zero, rng);
  return p;
}

LayerNormParams make_layer_norm(ParamStore& store, const std::string& prefix,
                                int d, Rng& rng) {
  LayerNormParams p;
  p.gain = store.create(prefix + ".gain", {d}, ParamStore::Init::One, rng);
  p.bias = store.create(prefix + ".bias", {d}, ParamStore::Init::Zero, rng);
  return p;
}

AttentionParams make_attention(ParamStore& store, const std::string& prefix,
                               int d_model, Rng& rng) {
  AttentionParams p;
  p.q = make_linear(store, prefix + ".q", d_model, d_model, rng);
  p.k = make_linear(store, prefix + ".k", d_model, d_model, rng);
  p.v = make_linear(store, prefix + ".v", d_model, d_model, rng);
  p.o = make_linear(store, prefix + ".o", d_model, d_model, rng);
  return p;
}

BlockParams make_block(ParamStore& store, const std::string& prefix,
                       bool with_cross, int d_model, int d_ffn, Rng& rng) {
  BlockParams p;
  p.ln_self = make_layer_norm(store, prefix + ".ln_self", d_model, rng);
  p.self = make_attention(store, prefix + ".self", d_model, rng);
  p.has_cross = with_cross;
  if (with_cross) {
    p.ln_cross = make_layer_norm(store, prefix + ".ln_cross", d_model, rng);
    p.cross = make_attention(store, prefix + ".cross", d_model, rng);
  }
  p.ln_ffn = make_layer_norm(store, prefix + ".ln_ffn", d_model, rng);
  p.ffn.hidden = make_linear(store, prefix + ".ffn.hidden", d_model, d_ffn, rng);
  p.ffn.out = make_linear(store, prefix + ".ffn.out", d_ffn, d_model, rng);
  return p;
}

}  // namespace mf
