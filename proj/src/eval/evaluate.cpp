#include "eval/evaluate.hpp"

#include <fstream>

#include <json.hpp>

#include "core/error.hpp"

namespace mf {

using nlohmann::json;

std::vector<int> mismatch_positions(const std::string& target,
                                    const std::string& prediction) {
  std::vector<int> out;
  const std::size_t n = std::max(target.size(), prediction.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= target.size() || i >= prediction.size() || target[i] != prediction[i])
      out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

int argmax_row(const double* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;  // ties keep the lowest id
  return best;
}

}  // namespace

std::vector<std::string> predict_batch(const TransformerModel& model,
                                       const Vocab& vocab,
                                       const std::vector<ExprSample>& samples,
                                       int batch_size) {
  const ModelConfig& cfg = model.config();
  std::vector<std::string> predictions(samples.size());

  for (std::size_t lo = 0; lo < samples.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(samples.size(), lo + static_cast<std::size_t>(batch_size));
    const int b = static_cast<int>(hi - lo);

    IdMatrix src = IdMatrix::zeros(b, cfg.max_in);
    for (int r = 0; r < b; ++r) {
      auto ids = vocab.encode_input(samples[lo + static_cast<std::size_t>(r)].input_text, cfg.max_in);
      for (int c = 0; c < cfg.max_in; ++c) src.at(r, c) = ids[static_cast<std::size_t>(c)];
    }
    auto memory = model.encode(src, /*training=*/false);

    std::vector<std::vector<int>> generated(static_cast<std::size_t>(b));
    std::vector<std::uint8_t> done(static_cast<std::size_t>(b), 0);
    IdMatrix prefix = IdMatrix::zeros(b, 1);
    for (int r = 0; r < b; ++r) prefix.at(r, 0) = Vocab::kBos;

    while (prefix.cols < cfg.max_out) {
      bool all_done = true;
      for (auto d : done) all_done = all_done && d;
      if (all_done) break;

      Tensor logits = model.decode(memory, prefix, /*training=*/false);
      const int v = cfg.vocab_size;
      IdMatrix next = IdMatrix::zeros(b, prefix.cols + 1);
      for (int r = 0; r < b; ++r) {
        for (int c = 0; c < prefix.cols; ++c) next.at(r, c) = prefix.at(r, c);
        int tok = Vocab::kPad;
        if (!done[static_cast<std::size_t>(r)]) {
          const double* row = logits.data() +
              (static_cast<std::int64_t>(r) * prefix.cols + (prefix.cols - 1)) * v;
          tok = argmax_row(row, v);
          if (tok == Vocab::kEos) {
            done[static_cast<std::size_t>(r)] = 1;
          } else {
            generated[static_cast<std::size_t>(r)].push_back(tok);
          }
        }
        next.at(r, prefix.cols) = tok;
      }
      prefix = std::move(next);
    }

    for (int r = 0; r < b; ++r)
      predictions[lo + static_cast<std::size_t>(r)] =
          vocab.decode(generated[static_cast<std::size_t>(r)]);
  }
  return predictions;
}

std::string greedy_decode(const TransformerModel& model, const Vocab& vocab,
                          const std::string& input_text) {
  ExprSample s;
  s.input_text = input_text;
  return predict_batch(model, vocab, {s}, 1)[0];
}

EvalReport score(const TransformerModel& model, const Vocab& vocab,
                 const std::vector<ExprSample>& test_set,
                 std::size_t wrong_example_cap) {
  if (test_set.empty()) throw ContractError("score: empty test set");
  EvalReport report;
  auto predictions = predict_batch(model, vocab, test_set);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto& sample = test_set[i];
    const auto& pred = predictions[i];
    // the stored label, not a re-parse: obfuscated corpora keep their types
    auto& stat = report.per_type[static_cast<std::size_t>(sample.expr_type)];
    ++report.total;
    ++stat.count;
    if (pred == sample.target_text) {
      ++report.correct;
      ++stat.correct;
    } else {
      for (int pos : mismatch_positions(sample.target_text, pred))
        ++report.char_errors[pos];
      if (report.wrong_examples.size() < wrong_example_cap)
        report.wrong_examples.push_back({sample.input_text, sample.target_text, pred});
    }
  }
  return report;
}

std::string EvalReport::to_json_text() const {
  json per_type_json = json::object();
  for (int i = 0; i < kNumExprTypes; ++i) {
    const auto& stat = per_type[static_cast<std::size_t>(i)];
    per_type_json[expr_type_name(static_cast<ExprType>(i))] = {
        {"count", stat.count}, {"correct", stat.correct}, {"acc", stat.accuracy()}};
  }
  json char_errors_json = json::object();
  for (const auto& [pos, count] : char_errors)
    char_errors_json[std::to_string(pos)] = count;
  json wrong = json::array();
  for (const auto& w : wrong_examples)
    wrong.push_back({{"input", w.input}, {"target", w.target}, {"prediction", w.prediction}});
  json j{{"overall", overall()},
         {"total", total},
         {"correct", correct},
         {"per_type", per_type_json},
         {"char_errors", char_errors_json},
         {"wrong_examples", wrong}};
  return j.dump(2);
}

EvalReport EvalReport::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  EvalReport r;
  r.total = j.at("total").get<long long>();
  r.correct = j.at("correct").get<long long>();
  for (int i = 0; i < kNumExprTypes; ++i) {
    const json& tj = j.at("per_type").at(expr_type_name(static_cast<ExprType>(i)));
    auto& stat = r.per_type[static_cast<std::size_t>(i)];
    stat.count = tj.at("count").get<long long>();
    stat.correct = tj.at("correct").get<long long>();
  }
  for (const auto& [key, value] : j.at("char_errors").items())
    r.char_errors[std::stoi(key)] = value.get<long long>();
  for (const auto& w : j.at("wrong_examples"))
    r.wrong_examples.push_back({w.at("input").get<std::string>(),
                                w.at("target").get<std::string>(),
                                w.at("prediction").get<std::string>()});
  return r;
}

void EvalReport::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_json_text() << '\n';
  if (!out) throw IoError("write failed for " + path);
}

EvalReport EvalReport::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

}  // namespace mf
