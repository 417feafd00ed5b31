#pragma once

#include <string>

#include "data/vocab.hpp"
#include "model/transformer.hpp"

namespace mf {

// Runs one traced forward pass (teacher-forced on the model's own greedy
// output) and serializes the attention distributions, plus per-position
// halting counts for the adaptive variant:
// {"input": [chars], "output": [chars],
//  "traces": [{"role", "layer", "head", "weights": [[...]]}],
//  "act": {"n_updates": [...], "remainders": [...]} | null}
// Matrices are trimmed to the tokenized lengths; padded keys carry exactly
// zero weight, so every row still sums to 1.
std::string attention_export_json(const TransformerModel& model,
                                  const Vocab& vocab,
                                  const std::string& input_text);

void export_attention(const TransformerModel& model, const Vocab& vocab,
                      const std::string& input_text,
                      const std::string& out_path);

}  // namespace mf
