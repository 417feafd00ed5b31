#include "train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "eval/evaluate.hpp"
#include "train/checkpoint.hpp"

namespace mf {

namespace {

constexpr std::uint64_t kDropoutStream = 0xD509u;
constexpr std::uint64_t kInitStream = 0x111Du;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::unique_ptr<TransformerModel> build_variant(ModelKind kind,
                                                const ModelConfig& model_cfg,
                                                const UTConfig& ut_cfg,
                                                std::uint64_t seed) {
  return std::make_unique<TransformerModel>(kind, model_cfg, ut_cfg,
                                            mix_seed(seed, kInitStream));
}

double train_step(TransformerModel& model, const Batch& batch, Adam& adam,
                  const TrainConfig& cfg, long long step) {
  model.params().zero_grad();

  GradTape tape;
  double loss_value = 0.0;
  {
    TapeScope scope(tape);
    Rng drop_rng(mix_seed(mix_seed(cfg.seed, kDropoutStream), static_cast<std::uint64_t>(step)));
    ForwardResult fwd = model.forward(batch.src, batch.tgt_in, /*training=*/true, &drop_rng);
    Tensor loss = ops::cross_entropy(fwd.logits, batch.tgt_out,
                                     model.config().pad_id, cfg.label_smoothing);
    if (model.ut_config().ponder_tau > 0.0 && fwd.ponder_cost.defined())
      loss = ops::add(loss, ops::scale(fwd.ponder_cost, model.ut_config().ponder_tau));
    loss_value = loss.item();
    if (!std::isfinite(loss_value))
      throw DivergenceError("non-finite training loss", step);
    tape.backward(loss);
  }

  for (const auto& [name, t] : model.params().entries()) {
    if (!t.has_grad()) continue;
    for (double g : t.grad())
      if (!std::isfinite(g))
        throw DivergenceError("non-finite gradient in " + name, step);
  }

  const double lr = warmup_lr(step, model.config().d_model, cfg.warmup_steps,
                              cfg.lr_scale);
  adam.step(model.params(), lr, cfg.clip_norm);
  return loss_value;
}

FitResult fit(TransformerModel& model, const std::vector<ExprSample>& train_corpus,
              const std::vector<ExprSample>& eval_corpus, const TrainConfig& cfg,
              const std::string& out_dir, const FitResume* resume) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

  FitResult result;
  result.metrics_path = out_dir + "/metrics.csv";
  result.checkpoint_path = out_dir + "/model.ckpt";

  const long long start_step = resume ? resume->start_step : 0;
  std::ofstream metrics(result.metrics_path,
                        resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw IoError("cannot open " + result.metrics_path + " for writing");
  if (!resume) {
    metrics << "step,loss,lr,acc_overall";
    for (int i = 0; i < kNumExprTypes; ++i)
      metrics << ",acc_" << expr_type_name(static_cast<ExprType>(i));
    metrics << '\n';
  }

  Adam local_adam(model.params(), {cfg.beta1, cfg.beta2, cfg.adam_eps});
  Adam& adam = resume && resume->adam ? *resume->adam : local_adam;

  const Vocab vocab;
  std::vector<ExprSample> eval_slice = eval_corpus;
  if (cfg.eval_samples > 0 &&
      eval_slice.size() > static_cast<std::size_t>(cfg.eval_samples))
    eval_slice.resize(static_cast<std::size_t>(cfg.eval_samples));

  double last_loss = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.steps > start_step) {
    Batcher batcher(train_corpus, vocab, model.config().max_in,
                    model.config().max_out, cfg.batch_size, cfg.seed);
    for (long long step = start_step + 1; step <= cfg.steps; ++step) {
      Batch batch = batcher.batch_at(step - 1);
      last_loss = train_step(model, batch, adam, cfg, step);
      const double lr = warmup_lr(step, model.config().d_model, cfg.warmup_steps,
                                  cfg.lr_scale);
      metrics << step << ',' << fmt_double(last_loss) << ',' << fmt_double(lr);
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0 && !eval_slice.empty()) {
        EvalReport report = score(model, vocab, eval_slice);
        metrics << ',' << fmt_double(report.overall());
        for (int i = 0; i < kNumExprTypes; ++i)
          metrics << ',' << fmt_double(report.per_type[static_cast<std::size_t>(i)].accuracy());
      } else {
        for (int i = 0; i < kNumExprTypes + 1; ++i) metrics << ',';
      }
      metrics << '\n';
      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
        metrics.flush();
        save_checkpoint(result.checkpoint_path, model, &adam,
                        {step, cfg.seed, last_loss});
      }
      result.steps_run = step - start_step;
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.final_loss = last_loss;
  metrics.flush();
  if (!metrics) throw IoError("write failed for " + result.metrics_path);
  save_checkpoint(result.checkpoint_path, model, &adam,
                  {cfg.steps, cfg.seed, last_loss});
  return result;
}

}  // namespace mf
