#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "model/act.hpp"
#include "model/layers.hpp"

namespace mf {

// Update-indicator augmentation of the recurrent step: appends a scalar
// feature that is 1 on the first update and 0 afterwards.
Tensor append_update_indicator(const Tensor& x, int step);
// Full input preparation of one recurrent step: indicator concat, shared
// projection back to d_model, plus the sinusoidal depth-step signal.
Tensor timestep_augment(const Tensor& x, int step, const LinearParams& proj,
                        const Tensor& depth_row);

struct ForwardResult {
  Tensor logits;  // [b, t_out, vocab]
  std::optional<ACTState> encoder_act;
  std::optional<ACTState> decoder_act;
  Tensor ponder_cost;  // scalar sum of N(t)+R(t) over both stacks (ACT only)
};

// The three studied variants behind one interface. `t` stacks n_layers
// distinct blocks; `ut` applies one shared block fixed_steps times with the
// depth-step augmentation; `aut` replaces the fixed loop with per-position
// adaptive halting in both stacks.
class TransformerModel {
 public:
  TransformerModel(ModelKind kind, const ModelConfig& cfg, const UTConfig& ut,
                   std::uint64_t init_seed);

  ModelKind kind() const { return kind_; }
  const ModelConfig& config() const { return cfg_; }
  const UTConfig& ut_config() const { return ut_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  struct Memory {
    Tensor states;  // [b, t_in, d]
    std::vector<std::uint8_t> key_allowed;  // batch x t_in pad mask
    int batch = 0;
    std::optional<ACTState> act;
    Tensor ponder;  // defined when ACT ran
  };

  Memory encode(const IdMatrix& src, bool training, Rng* drop_rng = nullptr,
                TraceCollector* trace = nullptr) const;

  // Teacher-forced decoder pass over the full target prefix.
  Tensor decode(const Memory& memory, const IdMatrix& tgt_in, bool training,
                Rng* drop_rng = nullptr, TraceCollector* trace = nullptr,
                std::optional<ACTState>* act_out = nullptr,
                Tensor* ponder_out = nullptr) const;

  ForwardResult forward(const IdMatrix& src, const IdMatrix& tgt_in,
                        bool training, Rng* drop_rng = nullptr,
                        TraceCollector* trace = nullptr) const;

  // Closed-form parameter count for this configuration; asserted against
  // ParamStore::total_values() in tests.
  static std::int64_t expected_param_count(ModelKind kind,
                                           const ModelConfig& cfg);

 private:
  Tensor embed(const Tensor& table, const IdMatrix& ids, bool training,
               Rng* drop_rng) const;
  Tensor pos_rows(int t) const;
  Tensor depth_row(int step) const;

  struct ActResult {
    Tensor states;
    ACTState info;
    Tensor ponder;
  };
  ActResult act_loop(Tensor state, int batch, int seq_len,
                     const std::function<Tensor(const Tensor&, int)>& apply_step,
                     const LinearParams& halt) const;

  ModelKind kind_;
  ModelConfig cfg_;
  UTConfig ut_;
  ParamStore params_;

  Tensor src_embed_;
  Tensor tgt_embed_;
  std::vector<BlockParams> enc_blocks_;
  std::vector<BlockParams> dec_blocks_;
  LayerNormParams enc_final_ln_;
  LayerNormParams dec_final_ln_;
  LinearParams out_proj_;
  LinearParams enc_aug_;
  LinearParams dec_aug_;
  LinearParams enc_halt_;
  LinearParams dec_halt_;
  Tensor pos_table_;  // constant sinusoid table, not a parameter
};

}  // namespace mf
