#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/ops.hpp"
#include "model/config.hpp"
#include "model/params.hpp"

namespace mf {

// Softmax weights of one attention application, captured for analysis.
struct AttentionTrace {
  std::string role;  // encoder-self | decoder-self | decoder-encoder
  int layer = 0;     // layer index for T, depth-step index for UT/AUT
  int head = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;  // row-major rows x cols, batch item 0
};

struct ActTrace {
  std::vector<int> n_updates;      // per position
  std::vector<double> remainders;  // per position
};

struct TraceCollector {
  std::vector<AttentionTrace> attention;
  std::optional<ActTrace> encoder_act;
  std::optional<ActTrace> decoder_act;
  int encoder_block_applications = 0;
  int decoder_block_applications = 0;
};

// Sinusoidal table: row p is [sin(p/10000^(0/d)), cos(p/10000^(0/d)),
// sin(p/10000^(2/d)), ...]. Shared by input positions and depth steps.
Tensor positional_encoding(int max_len, int d_model);

// x [..., in] with a trailing feature axis; w [in x out], b [out].
Tensor linear(const Tensor& x, const LinearParams& p);

// [b, t, d] -> [b*h, t, d/h] and back.
Tensor split_heads(const Tensor& x, int n_heads);
Tensor merge_heads(const Tensor& x, int batch, int n_heads);

// Additive attention masks: 0 where attending is allowed, -1e9 where not.
// ContractError if any query row has no allowed key.
Tensor causal_mask_bias(int t);
// allowed key j for batch item i iff key_allowed[i*t_k + j]. Expanded to
// [batch*n_heads, t_q, t_k].
Tensor key_padding_mask_bias(const std::vector<std::uint8_t>& key_allowed,
                             int batch, int n_heads, int t_q, int t_k);

struct AttentionResult {
  Tensor output;   // same leading shape as queries
  Tensor weights;  // softmax weights
};

// Single-head scaled dot-product attention, q [m x d], k/v [n x d].
// mask, when present, is row-major m x n with nonzero = allowed.
AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v,
                                     const std::vector<std::uint8_t>* mask = nullptr);

// Batched-head core: q [B x m x dh], k_t [B x dh x n], v [B x n x dh],
// mask_bias broadcastable onto [B x m x n] (or undefined).
AttentionResult scaled_dot_attention_batched(const Tensor& q, const Tensor& k_t,
                                             const Tensor& v,
                                             const Tensor& mask_bias);

// Projected keys/values of one attention layer, reusable across queries
// (cross-attention over a fixed memory, recurrent decoder steps).
struct KvCache {
  Tensor k_t;  // [b*h x dh x t_k]
  Tensor v;    // [b*h x t_k x dh]
  int t_k = 0;
};

KvCache project_kv(const Tensor& h_kv, const AttentionParams& p, int n_heads);

Tensor multi_head_attention(const Tensor& h_q, const KvCache& kv,
                            const AttentionParams& p, int n_heads,
                            const Tensor& mask_bias, TraceCollector* trace,
                            const char* role, int layer);
Tensor multi_head_attention(const Tensor& h_q, const Tensor& h_kv,
                            const AttentionParams& p, int n_heads,
                            const Tensor& mask_bias, TraceCollector* trace,
                            const char* role, int layer);

// Pre-norm residual blocks. `self_bias`/`cross_bias` are additive mask
// tensors; undefined tensors mean "no mask".
Tensor encoder_block(const Tensor& x, const BlockParams& p,
                     const ModelConfig& cfg, const Tensor& self_bias,
                     bool training, Rng* drop_rng, TraceCollector* trace,
                     int layer);
Tensor decoder_block(const Tensor& x, const KvCache& memory_kv,
                     const BlockParams& p, const ModelConfig& cfg,
                     const Tensor& self_bias, const Tensor& cross_bias,
                     bool training, Rng* drop_rng, TraceCollector* trace,
                     int layer);

}  // namespace mf
