#pragma once

#include <memory>
#include <string>
#include <vector>

#include "model/transformer.hpp"
#include "train/adam.hpp"
#include "train/batcher.hpp"
#include "train/run_config.hpp"

namespace mf {

// Constructs one of the three variants behind the shared forward interface,
// with parameter initialization derived from the training seed.
std::unique_ptr<TransformerModel> build_variant(ModelKind kind,
                                                const ModelConfig& model_cfg,
                                                const UTConfig& ut_cfg,
                                                std::uint64_t seed);

// One optimization step: forward with teacher forcing, cross-entropy over
// non-pad positions, backward, Adam update at the scheduled rate. Gradients
// are zeroed at entry. Returns the (detached) loss. DivergenceError on a
// non-finite loss or gradient.
double train_step(TransformerModel& model, const Batch& batch, Adam& adam,
                  const TrainConfig& cfg, long long step);

struct FitResume {
  Adam* adam = nullptr;       // restored optimizer
  long long start_step = 0;   // steps already taken
};

struct FitResult {
  long long steps_run = 0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::string metrics_path;
  std::string checkpoint_path;
};

// Full training loop with periodic eval and checkpointing. Writes
// out_dir/metrics.csv (`step,loss,lr,acc_overall,acc_AA_ADD,...,acc_AB_MUL`;
// accuracy columns are filled on eval steps, empty otherwise) and
// out_dir/model.ckpt. (seed, config, corpus) fully determine the metrics
// log; resuming from a checkpoint appends the identical continuation.
FitResult fit(TransformerModel& model, const std::vector<ExprSample>& train_corpus,
              const std::vector<ExprSample>& eval_corpus, const TrainConfig& cfg,
              const std::string& out_dir, const FitResume* resume = nullptr);

}  // namespace mf
