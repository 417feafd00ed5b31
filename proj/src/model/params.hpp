#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace mf {

// Owns every learned tensor of a model, keyed by a hierarchical name.
// Registration order is the canonical iteration order everywhere (optimizer,
// checkpoints, gradient checks) so that runs are reproducible.
class ParamStore {
 public:
  enum class Init { Zero, One, Glorot, Const };

  Tensor create(const std::string& name, std::vector<int> shape, Init init,
                Rng& rng, double const_value = 0.0);

  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::size_t count() const { return entries_.size(); }
  std::int64_t total_values() const;

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Parameter bundles for the building blocks. All weights are [in x out].
struct LinearParams {
  Tensor w;
  Tensor b;
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct AttentionParams {
  LinearParams q, k, v, o;
};

struct FfnParams {
  LinearParams hidden, out;
};

// One pre-norm transformer block; decoder blocks add the cross-attention
// sub-layer.
struct BlockParams {
  LayerNormParams ln_self;
  AttentionParams self;
  bool has_cross = false;
  LayerNormParams ln_cross;
  AttentionParams cross;
  LayerNormParams ln_ffn;
  FfnParams ffn;
};

LinearParams make_linear(ParamStore& store, const std::string& prefix, int in,
                         int out, Rng& rng);
LayerNormParams make_layer_norm(ParamStore& store, const std::string& prefix,
                                int d, Rng& rng);
AttentionParams make_attention(ParamStore& store, const std::string& prefix,
                               int d_model, Rng& rng);
BlockParams make_block(ParamStore& store, const std::string& prefix,
                       bool with_cross, int d_model, int d_ffn, Rng& rng);

}  // namespace mf
