#include "model/transformer.hpp"

#include <cmath>
#include <cstring>

namespace mf {

Tensor append_update_indicator(const Tensor& x, int step) {
  std::vector<int> shape = x.shape();
  shape.back() = 1;
  Tensor ind = Tensor::full(shape, step == 1 ? 1.0 : 0.0);
  return ops::concat_lastdim(x, ind);
}

Tensor timestep_augment(const Tensor& x, int step, const LinearParams& proj,
                        const Tensor& depth_row) {
  Tensor y = linear(append_update_indicator(x, step), proj);
  return ops::add(y, depth_row);
}

TransformerModel::TransformerModel(ModelKind kind, const ModelConfig& cfg,
                                   const UTConfig& ut, std::uint64_t init_seed)
    : kind_(kind), cfg_(cfg), ut_(ut) {
  cfg_.validate();
  ut_.validate();
  ut_.act_enabled = kind_ == ModelKind::AdaptiveUniversal;

  Rng rng(init_seed);
  const int d = cfg_.d_model;
  src_embed_ = params_.create("src_embed", {cfg_.vocab_size, d},
                              ParamStore::Init::Glorot, rng);
  tgt_embed_ = params_.create("tgt_embed", {cfg_.vocab_size, d},
                              ParamStore::Init::Glorot, rng);

  const bool shared = kind_ != ModelKind::Transformer;
  if (shared) {
    enc_blocks_.push_back(make_block(params_, "encoder.block", false, d, cfg_.d_ffn, rng));
    enc_aug_ = make_linear(params_, "encoder.aug", d + 1, d, rng);
    dec_blocks_.push_back(make_block(params_, "decoder.block", true, d, cfg_.d_ffn, rng));
    dec_aug_ = make_linear(params_, "decoder.aug", d + 1, d, rng);
  } else {
    for (int i = 0; i < cfg_.n_layers; ++i)
      enc_blocks_.push_back(make_block(params_, "encoder.layer" + std::to_string(i),
                                       false, d, cfg_.d_ffn, rng));
    for (int i = 0; i < cfg_.n_layers; ++i)
      dec_blocks_.push_back(make_block(params_, "decoder.layer" + std::to_string(i),
                                       true, d, cfg_.d_ffn, rng));
  }
  if (kind_ == ModelKind::AdaptiveUniversal) {
    // zero weights with a positive bias start every position at the same
    // halting probability; training differentiates them from there
    enc_halt_.w = params_.create("encoder.halt.w", {d, 1}, ParamStore::Init::Zero, rng);
    enc_halt_.b = params_.create("encoder.halt.b", {1}, ParamStore::Init::Const, rng, 1.0);
    dec_halt_.w = params_.create("decoder.halt.w", {d, 1}, ParamStore::Init::Zero, rng);
    dec_halt_.b = params_.create("decoder.halt.b", {1}, ParamStore::Init::Const, rng, 1.0);
  }
  enc_final_ln_ = make_layer_norm(params_, "encoder.final_ln", d, rng);
  dec_final_ln_ = make_layer_norm(params_, "decoder.final_ln", d, rng);
  out_proj_ = make_linear(params_, "out_proj", d, cfg_.vocab_size, rng);

  const int depth_rows = shared ? std::max(ut_.fixed_steps, ut_.max_updates) : 0;
  pos_table_ = positional_encoding(std::max({cfg_.max_in, cfg_.max_out, depth_rows}), d);
}

Tensor TransformerModel::pos_rows(int t) const {
  const int d = cfg_.d_model;
  Tensor rows = Tensor::zeros({t, d});
  std::memcpy(rows.data(), pos_table_.data(), sizeof(double) * static_cast<std::size_t>(t) * d);
  return rows;
}

Tensor TransformerModel::depth_row(int step) const {
  const int d = cfg_.d_model;
  Tensor row = Tensor::zeros({d});
  std::memcpy(row.data(), pos_table_.data() + static_cast<std::size_t>(step - 1) * d,
              sizeof(double) * static_cast<std::size_t>(d));
  return row;
}

Tensor TransformerModel::embed(const Tensor& table, const IdMatrix& ids,
                               bool training, Rng* drop_rng) const {
  Tensor x = ops::scale(ops::embedding_lookup(table, ids),
                        std::sqrt(static_cast<double>(cfg_.d_model)));
  x = ops::add(x, pos_rows(ids.cols));
  if (training && cfg_.dropout > 0.0) {
    if (!drop_rng) throw ContractError("training forward pass needs a dropout rng");
    x = ops::dropout(x, cfg_.dropout, training, *drop_rng);
  }
  return x;
}

TransformerModel::ActResult TransformerModel::act_loop(
    Tensor state, int batch, int seq_len,
    const std::function<Tensor(const Tensor&, int)>& apply_step,
    const LinearParams& halt) const {
  const int d = cfg_.d_model;
  const double threshold = 1.0 - ut_.epsilon;
  const std::size_t n_pos = static_cast<std::size_t>(batch) * seq_len;

  ActResult result;
  result.info.batch = batch;
  result.info.seq_len = seq_len;
  result.info.positions.assign(n_pos, {});

  std::vector<std::uint8_t> running(n_pos, 1);
  std::vector<double> cum_val(n_pos, 0.0);

  Tensor cum = Tensor::zeros({batch, seq_len});       // differentiable sum of h
  Tensor acc = Tensor::zeros({batch, seq_len, d});    // p-weighted state sum
  Tensor rem_sum = Tensor::zeros({1});                // sum of remainders (ponder)
  std::size_t n_running = n_pos;

  for (int n = 1; n <= ut_.max_updates && n_running > 0; ++n) {
    Tensor cand = apply_step(state, n);
    Tensor h = ops::reshape(ops::sigmoid(linear(cand, halt)), {batch, seq_len});

    const bool last = n == ut_.max_updates;
    Tensor cont_mask = Tensor::zeros({batch, seq_len});
    Tensor halt_mask = Tensor::zeros({batch, seq_len});
    Tensor entry_mask = Tensor::zeros({batch, seq_len});
    for (std::size_t p = 0; p < n_pos; ++p) {
      if (!running[p]) continue;
      entry_mask.data()[p] = 1.0;
      const double hv = h.data()[p];
      const bool halts = last || cum_val[p] + hv >= threshold;
      auto& pos = result.info.positions[p];
      if (halts) {
        halt_mask.data()[p] = 1.0;
        pos.remainder = 1.0 - cum_val[p];
        pos.halt_probs.push_back(pos.remainder);
        pos.n_updates = n;
        running[p] = 0;
        --n_running;
      } else {
        cont_mask.data()[p] = 1.0;
        pos.halt_probs.push_back(hv);
        cum_val[p] += hv;
      }
    }

    // p^n = h for continuing positions, 1 - sum of previous h where halting
    Tensor remainder = ops::add_scalar(ops::scale(cum, -1.0), 1.0);
    Tensor p_n = ops::add(ops::mul(h, cont_mask), ops::mul(remainder, halt_mask));
    acc = ops::add(acc, ops::mul(ops::expand_last(p_n, d), cand));
    cum = ops::add(cum, ops::mul(h, cont_mask));
    rem_sum = ops::add(rem_sum, ops::sum(ops::mul(remainder, halt_mask)));

    if (n_running > 0) {
      // carry halted positions unchanged, keep updating the rest
      Tensor keep = ops::expand_last(entry_mask, d);
      Tensor inv = ops::add_scalar(ops::scale(keep, -1.0), 1.0);
      state = ops::add(ops::mul(cand, keep), ops::mul(state, inv));
    }
  }

  long long total_updates = 0;
  for (const auto& pos : result.info.positions) total_updates += pos.n_updates;
  result.ponder = ops::add_scalar(rem_sum, static_cast<double>(total_updates));
  result.states = acc;
  return result;
}

TransformerModel::Memory TransformerModel::encode(const IdMatrix& src,
                                                  bool training, Rng* drop_rng,
                                                  TraceCollector* trace) const {
  const int b = src.rows, t = src.cols;
  Memory mem;
  mem.batch = b;
  mem.key_allowed.assign(static_cast<std::size_t>(b) * t, 0);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < t; ++j)
      mem.key_allowed[static_cast<std::size_t>(i) * t + j] =
          src.at(i, j) != cfg_.pad_id ? 1 : 0;

  Tensor x = embed(src_embed_, src, training, drop_rng);
  Tensor self_bias = key_padding_mask_bias(mem.key_allowed, b, cfg_.n_heads, t, t);

  switch (kind_) {
    case ModelKind::Transformer:
      for (int l = 0; l < static_cast<int>(enc_blocks_.size()); ++l)
        x = encoder_block(x, enc_blocks_[l], cfg_, self_bias, training, drop_rng,
                          trace, l);
      break;
    case ModelKind::Universal:
      for (int n = 1; n <= ut_.fixed_steps; ++n)
        x = encoder_block(timestep_augment(x, n, enc_aug_, depth_row(n)),
                          enc_blocks_[0], cfg_, self_bias, training, drop_rng,
                          trace, n - 1);
      break;
    case ModelKind::AdaptiveUniversal: {
      auto step = [&](const Tensor& s, int n) {
        return encoder_block(timestep_augment(s, n, enc_aug_, depth_row(n)),
                             enc_blocks_[0], cfg_, self_bias, training, drop_rng,
                             trace, n - 1);
      };
      ActResult r = act_loop(x, b, t, step, enc_halt_);
      x = r.states;
      mem.act = std::move(r.info);
      mem.ponder = r.ponder;
      if (trace) {
        ActTrace at;
        for (const auto& pos : mem.act->positions) {
          at.n_updates.push_back(pos.n_updates);
          at.remainders.push_back(pos.remainder);
        }
        trace->encoder_act = std::move(at);
      }
      break;
    }
  }
  mem.states = ops::layer_norm(x, enc_final_ln_.gain, enc_final_ln_.bias);
  return mem;
}

Tensor TransformerModel::decode(const Memory& memory, const IdMatrix& tgt_in,
                                bool training, Rng* drop_rng,
                                TraceCollector* trace,
                                std::optional<ACTState>* act_out,
                                Tensor* ponder_out) const {
  const int b = tgt_in.rows, t = tgt_in.cols;
  if (b != memory.batch)
    throw ShapeError("decode: batch " + std::to_string(b) + " vs memory batch " +
                     std::to_string(memory.batch));
  const int t_in = memory.states.dim(1);

  Tensor x = embed(tgt_embed_, tgt_in, training, drop_rng);
  Tensor causal = causal_mask_bias(t);
  Tensor cross_bias =
      key_padding_mask_bias(memory.key_allowed, b, cfg_.n_heads, t, t_in);

  switch (kind_) {
    case ModelKind::Transformer:
      for (int l = 0; l < static_cast<int>(dec_blocks_.size()); ++l) {
        KvCache kv = project_kv(memory.states, dec_blocks_[l].cross, cfg_.n_heads);
        x = decoder_block(x, kv, dec_blocks_[l], cfg_, causal, cross_bias,
                          training, drop_rng, trace, l);
      }
      break;
    case ModelKind::Universal: {
      KvCache kv = project_kv(memory.states, dec_blocks_[0].cross, cfg_.n_heads);
      for (int n = 1; n <= ut_.fixed_steps; ++n)
        x = decoder_block(timestep_augment(x, n, dec_aug_, depth_row(n)), kv,
                          dec_blocks_[0], cfg_, causal, cross_bias, training,
                          drop_rng, trace, n - 1);
      break;
    }
    case ModelKind::AdaptiveUniversal: {
      KvCache kv = project_kv(memory.states, dec_blocks_[0].cross, cfg_.n_heads);
      auto step = [&](const Tensor& s, int n) {
        return decoder_block(timestep_augment(s, n, dec_aug_, depth_row(n)), kv,
                             dec_blocks_[0], cfg_, causal, cross_bias, training,
                             drop_rng, trace, n - 1);
      };
      ActResult r = act_loop(x, b, t, step, dec_halt_);
      x = r.states;
      if (act_out) *act_out = r.info;
      if (ponder_out) *ponder_out = r.ponder;
      if (trace) {
        ActTrace at;
        for (const auto& pos : r.info.positions) {
          at.n_updates.push_back(pos.n_updates);
          at.remainders.push_back(pos.remainder);
        }
        trace->decoder_act = std::move(at);
      }
      break;
    }
  }
  x = ops::layer_norm(x, dec_final_ln_.gain, dec_final_ln_.bias);
  return linear(x, out_proj_);
}

ForwardResult TransformerModel::forward(const IdMatrix& src,
                                        const IdMatrix& tgt_in, bool training,
                                        Rng* drop_rng,
                                        TraceCollector* trace) const {
  ForwardResult out;
  Memory mem = encode(src, training, drop_rng, trace);
  out.encoder_act = mem.act;
  std::optional<ACTState> dec_act;
  Tensor dec_ponder;
  out.logits = decode(mem, tgt_in, training, drop_rng, trace, &dec_act, &dec_ponder);
  out.decoder_act = std::move(dec_act);
  if (mem.ponder.defined() && dec_ponder.defined())
    out.ponder_cost = ops::add(mem.ponder, dec_ponder);
  return out;
}

std::int64_t TransformerModel::expected_param_count(ModelKind kind,
                                                    const ModelConfig& cfg) {
  const std::int64_t d = cfg.d_model, f = cfg.d_ffn, v = cfg.vocab_size;
  const std::int64_t attn = 4 * (d * d + d);   // q, k, v, o projections
  const std::int64_t ln = 2 * d;               // gain + bias
  const std::int64_t ffn = d * f + f + f * d + d;
  const std::int64_t enc_block = ln + attn + ln + ffn;
  const std::int64_t dec_block = ln + attn + ln + attn + ln + ffn;
  const std::int64_t aug = (d + 1) * d + d;    // indicator projection
  const std::int64_t halt = d + 1;             // sigmoid halting unit

  std::int64_t total = 2 * v * d;              // src + tgt embeddings
  switch (kind) {
    case ModelKind::Transformer:
      total += cfg.n_layers * (enc_block + dec_block);
      break;
    case ModelKind::Universal:
      total += enc_block + aug + dec_block + aug;
      break;
    case ModelKind::AdaptiveUniversal:
      total += enc_block + aug + dec_block + aug + 2 * halt;
      break;
  }
  total += 2 * ln;          // final layer norms
  total += d * v + v;       // output projection
  return total;
}

}  // namespace mf
