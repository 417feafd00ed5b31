#pragma once

#include <cstdint>
#include <vector>

#include "core/ops.hpp"
#include "data/expr.hpp"
#include "data/vocab.hpp"

namespace mf {

struct Batch {
  IdMatrix src;      // [b x max_in], right-padded
  IdMatrix tgt_in;   // [b x max_out], BOS + target + PAD
  IdMatrix tgt_out;  // [b x max_out], target + EOS + PAD
};

// Deterministic batch stream. Every epoch is a fresh shuffle derived from
// (seed, epoch index), so the batch at a given step is a pure function of
// (corpus, seed, step) and training can resume from a checkpoint without
// replaying the stream.
class Batcher {
 public:
  Batcher(const std::vector<ExprSample>& corpus, const Vocab& vocab, int max_in,
          int max_out, int batch_size, std::uint64_t seed);

  Batch batch_at(long long step) const;
  long long batches_per_epoch() const { return batches_per_epoch_; }
  std::size_t corpus_size() const { return encoded_src_.size(); }

 private:
  int max_in_;
  int max_out_;
  int batch_size_;
  std::uint64_t seed_;
  long long batches_per_epoch_;
  std::vector<std::vector<int>> encoded_src_;
  std::vector<std::vector<int>> encoded_tgt_in_;
  std::vector<std::vector<int>> encoded_tgt_out_;

  mutable long long cached_epoch_ = -1;
  mutable std::vector<std::uint32_t> cached_perm_;
};

}  // namespace mf
