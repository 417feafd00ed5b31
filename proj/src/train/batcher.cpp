#include "train/batcher.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mf {

Batcher::Batcher(const std::vector<ExprSample>& corpus, const Vocab& vocab,
                 int max_in, int max_out, int batch_size, std::uint64_t seed)
    : max_in_(max_in), max_out_(max_out), batch_size_(batch_size), seed_(seed) {
  if (corpus.empty()) throw ContractError("batcher: empty corpus");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");

  encoded_src_.reserve(corpus.size());
  encoded_tgt_in_.reserve(corpus.size());
  encoded_tgt_out_.reserve(corpus.size());
  for (const auto& s : corpus) {
    if (static_cast<int>(s.input_text.size()) > max_in)
      throw LengthError("input '" + s.input_text + "' exceeds max_in " +
                        std::to_string(max_in));
    if (static_cast<int>(s.target_text.size()) + 2 > max_out)
      throw LengthError("target '" + s.target_text + "' of sample '" +
                        s.input_text + "' exceeds max_out " +
                        std::to_string(max_out) + " with BOS/EOS");
    encoded_src_.push_back(vocab.encode_input(s.input_text, max_in));

    std::vector<int> tin(static_cast<std::size_t>(max_out), Vocab::kPad);
    std::vector<int> tout(static_cast<std::size_t>(max_out), Vocab::kPad);
    tin[0] = Vocab::kBos;
    for (std::size_t i = 0; i < s.target_text.size(); ++i) {
      int id = vocab.id_of(s.target_text[i]);
      tin[i + 1] = id;
      tout[i] = id;
    }
    tout[s.target_text.size()] = Vocab::kEos;
    encoded_tgt_in_.push_back(std::move(tin));
    encoded_tgt_out_.push_back(std::move(tout));
  }
  const long long n = static_cast<long long>(corpus.size());
  batches_per_epoch_ = (n + batch_size_ - 1) / batch_size_;
}

Batch Batcher::batch_at(long long step) const {
  const long long epoch = step / batches_per_epoch_;
  const long long index = step % batches_per_epoch_;
  if (epoch != cached_epoch_) {
    cached_perm_.resize(encoded_src_.size());
    for (std::size_t i = 0; i < cached_perm_.size(); ++i)
      cached_perm_[i] = static_cast<std::uint32_t>(i);
    Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(cached_perm_);
    cached_epoch_ = epoch;
  }

  const long long n = static_cast<long long>(encoded_src_.size());
  const long long lo = index * batch_size_;
  const long long hi = std::min(lo + batch_size_, n);
  const int b = static_cast<int>(hi - lo);

  Batch batch;
  batch.src = IdMatrix::zeros(b, max_in_);
  batch.tgt_in = IdMatrix::zeros(b, max_out_);
  batch.tgt_out = IdMatrix::zeros(b, max_out_);
  for (int r = 0; r < b; ++r) {
    const auto src_row = cached_perm_[static_cast<std::size_t>(lo + r)];
    for (int c = 0; c < max_in_; ++c)
      batch.src.at(r, c) = encoded_src_[src_row][static_cast<std::size_t>(c)];
    for (int c = 0; c < max_out_; ++c) {
      batch.tgt_in.at(r, c) = encoded_tgt_in_[src_row][static_cast<std::size_t>(c)];
      batch.tgt_out.at(r, c) = encoded_tgt_out_[src_row][static_cast<std::size_t>(c)];
    }
  }
  return batch;
}

}  // namespace mf
