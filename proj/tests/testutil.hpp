#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "model/config.hpp"
#include "model/transformer.hpp"

namespace mftest {

inline double rel_err(double a, double b) {
  const double denom = std::max(std::abs(a), std::abs(b));
  if (denom < 1e-9) return 0.0;  // both negligible
  return std::abs(a - b) / denom;
}

inline mf::Tensor random_tensor(std::vector<int> shape, mf::Rng& rng,
                                double lo = -2.0, double hi = 2.0,
                                bool requires_grad = false) {
  mf::Tensor t = mf::Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.vec()) v = rng.next_uniform(lo, hi);
  return t;
}

// Central finite differences (h = 1e-5) against the tape's gradients.
// `forward` must be a pure function of the input tensors' current values;
// the scalar loss is sum(weights * forward(inputs)) with fixed random
// weights. Returns the worst relative error over all checked elements.
struct GradCheckResult {
  double max_rel_err = 0.0;
  long long checked = 0;
};

inline GradCheckResult grad_check(
    const std::function<mf::Tensor()>& forward,
    const std::vector<mf::Tensor>& inputs, std::uint64_t weight_seed,
    double h = 1e-5, long long max_per_input = 256) {
  using mf::Tensor;

  for (const Tensor& in : inputs)
    const_cast<Tensor&>(in).set_requires_grad(true);

  // fixed projection weights make the output scalar
  Tensor probe = forward();
  mf::Rng wrng(weight_seed);
  Tensor weights = random_tensor(probe.shape(), wrng, -1.0, 1.0);

  auto loss_value = [&]() {
    Tensor out = forward();
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.numel(); ++i)
      acc += out.data()[i] * weights.data()[i];
    return acc;
  };

  mf::GradTape tape;
  {
    mf::TapeScope scope(tape);
    Tensor out = forward();
    Tensor loss = mf::ops::sum(mf::ops::mul(out, weights));
    tape.backward(loss);
  }

  GradCheckResult result;
  for (const Tensor& in : inputs) {
    Tensor& t = const_cast<Tensor&>(in);
    const std::int64_t n = t.numel();
    const std::int64_t stride = n <= max_per_input ? 1 : n / max_per_input;
    for (std::int64_t i = 0; i < n; i += stride) {
      const double orig = t.data()[i];
      t.data()[i] = orig + h;
      const double up = loss_value();
      t.data()[i] = orig - h;
      const double down = loss_value();
      t.data()[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = t.has_grad() ? t.grad()[static_cast<std::size_t>(i)] : 0.0;
      result.max_rel_err = std::max(result.max_rel_err, rel_err(fd, analytic));
      ++result.checked;
    }
    t.zero_grad();
  }
  return result;
}

// End-to-end check: cross-entropy loss of a teacher-forced forward pass,
// finite differences probed at `samples_per_param` randomly selected scalar
// entries of every parameter.
inline GradCheckResult model_grad_check(const mf::TransformerModel& model,
                                        const mf::IdMatrix& src,
                                        const mf::IdMatrix& tgt_in,
                                        const mf::IdMatrix& tgt_out,
                                        std::uint64_t seed,
                                        int samples_per_param = 2,
                                        double h = 1e-5) {
  auto loss_value = [&] {
    mf::ForwardResult fwd = model.forward(src, tgt_in, /*training=*/false);
    return mf::ops::cross_entropy(fwd.logits, tgt_out, model.config().pad_id).item();
  };

  for (const auto& [name, t] : model.params().entries())
    const_cast<mf::Tensor&>(t).zero_grad();

  mf::GradTape tape;
  {
    mf::TapeScope scope(tape);
    mf::ForwardResult fwd = model.forward(src, tgt_in, /*training=*/false);
    mf::Tensor loss =
        mf::ops::cross_entropy(fwd.logits, tgt_out, model.config().pad_id);
    tape.backward(loss);
  }

  mf::Rng pick(seed);
  GradCheckResult result;
  for (const auto& [name, t] : model.params().entries()) {
    mf::Tensor& p = const_cast<mf::Tensor&>(t);
    for (int s = 0; s < samples_per_param; ++s) {
      const auto i = static_cast<std::int64_t>(
          pick.next_below(static_cast<std::uint64_t>(p.numel())));
      const double orig = p.data()[i];
      p.data()[i] = orig + h;
      const double up = loss_value();
      p.data()[i] = orig - h;
      const double down = loss_value();
      p.data()[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double analytic =
          p.has_grad() ? p.grad()[static_cast<std::size_t>(i)] : 0.0;
      result.max_rel_err = std::max(result.max_rel_err, rel_err(fd, analytic));
      ++result.checked;
    }
  }
  return result;
}

inline mf::IdMatrix random_ids(int rows, int cols, int vocab_size, mf::Rng& rng,
                               int first_real = 3) {
  mf::IdMatrix ids = mf::IdMatrix::zeros(rows, cols);
  for (int& id : ids.ids)
    id = first_real +
         static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab_size - first_real)));
  return ids;
}

inline mf::ModelConfig tiny_model_config() {
  mf::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ffn = 16;
  cfg.dropout = 0.0;
  cfg.vocab_size = 20;
  cfg.max_in = 12;  // holds single-digit-range inputs like "x=9,y=0,x*y"
  cfg.max_out = 6;
  return cfg;
}

}  // namespace mftest
