#include "model/layers.hpp"

#include <cmath>

namespace mf {

namespace {
constexpr double kMaskBias = -1e9;
}

Tensor positional_encoding(int max_len, int d_model) {
  Tensor pe = Tensor::zeros({max_len, d_model});
  double* p = pe.data();
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < d_model; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d_model);
      p[pos * d_model + i] = std::sin(angle);
      if (i + 1 < d_model) p[pos * d_model + i + 1] = std::cos(angle);
    }
  }
  return pe;
}

Tensor linear(const Tensor& x, const LinearParams& p) {
  return ops::affine(x, p.w, p.b);
}

Tensor split_heads(const Tensor& x, int n_heads) {
  return ops::split_heads(x, n_heads);
}

Tensor merge_heads(const Tensor& x, int batch, int n_heads) {
  return ops::merge_heads(x, batch, n_heads);
}

Tensor causal_mask_bias(int t) {
  Tensor bias = Tensor::zeros({t, t});
  double* p = bias.data();
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j < t; ++j) p[i * t + j] = kMaskBias;
  return bias;
}

Tensor key_padding_mask_bias(const std::vector<std::uint8_t>& key_allowed,
                             int batch, int n_heads, int t_q, int t_k) {
  if (static_cast<int>(key_allowed.size()) != batch * t_k)
    throw ShapeError("key mask size " + std::to_string(key_allowed.size()) +
                     " for batch " + std::to_string(batch) + " x " +
                     std::to_string(t_k) + " keys");
  for (int i = 0; i < batch; ++i) {
    bool any = false;
    for (int j = 0; j < t_k; ++j) any = any || key_allowed[i * t_k + j];
    if (!any)
      throw ContractError("attention: batch item " + std::to_string(i) +
                          " has no unmasked key");
  }
  Tensor bias = Tensor::zeros({batch * n_heads, t_q, t_k});
  double* p = bias.data();
  for (int i = 0; i < batch; ++i)
    for (int h = 0; h < n_heads; ++h)
      for (int q = 0; q < t_q; ++q)
        for (int j = 0; j < t_k; ++j)
          p[(((static_cast<std::int64_t>(i) * n_heads + h) * t_q) + q) * t_k + j] =
              key_allowed[i * t_k + j] ? 0.0 : kMaskBias;
  return bias;
}

AttentionResult scaled_dot_attention_batched(const Tensor& q, const Tensor& k_t,
                                             const Tensor& v,
                                             const Tensor& mask_bias) {
  const int dh = q.dim(2);
  Tensor scores = ops::bmm(q, k_t, 1.0 / std::sqrt(static_cast<double>(dh)));
  Tensor weights = ops::masked_softmax(scores, mask_bias);
  return {ops::bmm(weights, v), weights};
}

AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v,
                                     const std::vector<std::uint8_t>* mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw ShapeError("scaled_dot_attention expects rank-2 inputs");
  if (q.dim(1) != k.dim(1))
    throw ShapeError("scaled_dot_attention: query width " + q.shape_str() +
                     " vs key width " + k.shape_str());
  if (k.dim(0) != v.dim(0))
    throw ShapeError("scaled_dot_attention: keys " + k.shape_str() + " vs values " +
                     v.shape_str());
  const int m = q.dim(0), n = k.dim(0), d = q.dim(1);
  Tensor bias;
  if (mask) {
    if (static_cast<int>(mask->size()) != m * n)
      throw ShapeError("attention mask size mismatch");
    bias = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
      bool any = false;
      for (int j = 0; j < n; ++j) {
        bool allowed = (*mask)[i * n + j] != 0;
        any = any || allowed;
        bias.data()[i * n + j] = allowed ? 0.0 : kMaskBias;
      }
      if (!any)
        throw ContractError("attention: query row " + std::to_string(i) +
                            " has no unmasked key");
    }
  }
  auto r = scaled_dot_attention_batched(
      ops::reshape(q, {1, m, d}),
      ops::permute(ops::reshape(k, {1, n, d}), {0, 2, 1}),
      ops::reshape(v, {1, n, d}),
      bias.defined() ? ops::reshape(bias, {1, m, n}) : bias);
  return {ops::reshape(r.output, {m, d}), ops::reshape(r.weights, {m, n})};
}

KvCache project_kv(const Tensor& h_kv, const AttentionParams& p, int n_heads) {
  KvCache kv;
  kv.t_k = h_kv.dim(1);
  kv.k_t = ops::split_heads(linear(h_kv, p.k), n_heads, /*transpose_last=*/true);
  kv.v = ops::split_heads(linear(h_kv, p.v), n_heads);
  return kv;
}

namespace {

void capture_weights(TraceCollector* trace, const Tensor& weights, int n_heads,
                     const char* role, int layer) {
  if (!trace) return;
  const int m = weights.dim(1), n = weights.dim(2);
  for (int h = 0; h < n_heads; ++h) {
    AttentionTrace t;
    t.role = role;
    t.layer = layer;
    t.head = h;
    t.rows = m;
    t.cols = n;
    t.weights.assign(weights.data() + static_cast<std::int64_t>(h) * m * n,
                     weights.data() + static_cast<std::int64_t>(h + 1) * m * n);
    trace->attention.push_back(std::move(t));
  }
}

}  // namespace

Tensor multi_head_attention(const Tensor& h_q, const KvCache& kv,
                            const AttentionParams& p, int n_heads,
                            const Tensor& mask_bias, TraceCollector* trace,
                            const char* role, int layer) {
  const int b = h_q.dim(0);
  Tensor q = split_heads(linear(h_q, p.q), n_heads);
  auto attn = scaled_dot_attention_batched(q, kv.k_t, kv.v, mask_bias);
  capture_weights(trace, attn.weights, n_heads, role, layer);
  return linear(merge_heads(attn.output, b, n_heads), p.o);
}

Tensor multi_head_attention(const Tensor& h_q, const Tensor& h_kv,
                            const AttentionParams& p, int n_heads,
                            const Tensor& mask_bias, TraceCollector* trace,
                            const char* role, int layer) {
  return multi_head_attention(h_q, project_kv(h_kv, p, n_heads), p, n_heads,
                              mask_bias, trace, role, layer);
}

namespace {

Tensor maybe_dropout(const Tensor& x, const ModelConfig& cfg, bool training,
                     Rng* drop_rng) {
  if (!training || cfg.dropout == 0.0) return x;
  if (!drop_rng)
    throw ContractError("training forward pass needs a dropout rng");
  return ops::dropout(x, cfg.dropout, training, *drop_rng);
}

Tensor ffn_sublayer(const Tensor& x, const FfnParams& p) {
  return linear(ops::relu(linear(x, p.hidden)), p.out);
}

}  // namespace

Tensor encoder_block(const Tensor& x, const BlockParams& p,
                     const ModelConfig& cfg, const Tensor& self_bias,
                     bool training, Rng* drop_rng, TraceCollector* trace,
                     int layer) {
  if (trace) ++trace->encoder_block_applications;
  Tensor h = ops::layer_norm(x, p.ln_self.gain, p.ln_self.bias);
  Tensor attn = multi_head_attention(h, h, p.self, cfg.n_heads, self_bias, trace,
                                     "encoder-self", layer);
  Tensor y = ops::add(x, maybe_dropout(attn, cfg, training, drop_rng));
  Tensor h2 = ops::layer_norm(y, p.ln_ffn.gain, p.ln_ffn.bias);
  return ops::add(y, maybe_dropout(ffn_sublayer(h2, p.ffn), cfg, training, drop_rng));
}

Tensor decoder_block(const Tensor& x, const KvCache& memory_kv,
                     const BlockParams& p, const ModelConfig& cfg,
                     const Tensor& self_bias, const Tensor& cross_bias,
                     bool training, Rng* drop_rng, TraceCollector* trace,
                     int layer) {
  if (trace) ++trace->decoder_block_applications;
  Tensor h = ops::layer_norm(x, p.ln_self.gain, p.ln_self.bias);
  Tensor self = multi_head_attention(h, h, p.self, cfg.n_heads, self_bias, trace,
                                     "decoder-self", layer);
  Tensor y = ops::add(x, maybe_dropout(self, cfg, training, drop_rng));

  Tensor hc = ops::layer_norm(y, p.ln_cross.gain, p.ln_cross.bias);
  Tensor cross = multi_head_attention(hc, memory_kv, p.cross, cfg.n_heads,
                                      cross_bias, trace, "decoder-encoder", layer);
  y = ops::add(y, maybe_dropout(cross, cfg, training, drop_rng));

  Tensor hf = ops::layer_norm(y, p.ln_ffn.gain, p.ln_ffn.bias);
  return ops::add(y, maybe_dropout(ffn_sublayer(hf, p.ffn), cfg, training, drop_rng));
}

}  // namespace mf
