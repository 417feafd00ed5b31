#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "data/expr.hpp"
#include "data/vocab.hpp"
#include "model/transformer.hpp"

namespace mf {

struct EvalReport {
  struct TypeStat {
    long long count = 0;
    long long correct = 0;
    double accuracy() const {
      return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count);
    }
  };
  struct WrongExample {
    std::string input;
    std::string target;
    std::string prediction;
  };

  long long total = 0;
  long long correct = 0;
  std::array<TypeStat, kNumExprTypes> per_type{};
  std::map<int, long long> char_errors;  // mismatch position -> count
  std::vector<WrongExample> wrong_examples;

  double overall() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }

  std::string to_json_text() const;
  static EvalReport from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static EvalReport load(const std::string& path);
};

// 0-based positions where prediction and target bytes differ; compared
// left-aligned, extra or missing tail bytes count as mismatches.
std::vector<int> mismatch_positions(const std::string& target,
                                    const std::string& prediction);

// Greedy decoding: start from BOS, append the argmax token (lowest id wins
// ties) until EOS or the length cap; specials are stripped from the result.
std::string greedy_decode(const TransformerModel& model, const Vocab& vocab,
                          const std::string& input_text);

// Batched greedy predictions, one per sample, in order.
std::vector<std::string> predict_batch(const TransformerModel& model,
                                       const Vocab& vocab,
                                       const std::vector<ExprSample>& samples,
                                       int batch_size = 128);

// Exact-match scoring with the per-type breakdown and the character-position
// error histogram over wrong predictions.
EvalReport score(const TransformerModel& model, const Vocab& vocab,
                 const std::vector<ExprSample>& test_set,
                 std::size_t wrong_example_cap = 50);

}  // namespace mf
