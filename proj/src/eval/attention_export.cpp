#include "eval/attention_export.hpp"

#include <fstream>

#include <json.hpp>

#include "core/error.hpp"
#include "eval/evaluate.hpp"

namespace mf {

using nlohmann::json;

namespace {

json chars_json(const std::string& s) {
  json out = json::array();
  for (char c : s) out.push_back(std::string(1, c));
  return out;
}

// keep rows x cols (the real token spans); masked tails are exact zeros
json trim_weights(const AttentionTrace& t, int rows, int cols) {
  json m = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c)
      row.push_back(t.weights[static_cast<std::size_t>(r) * t.cols + c]);
    m.push_back(std::move(row));
  }
  return m;
}

}  // namespace

std::string attention_export_json(const TransformerModel& model,
                                  const Vocab& vocab,
                                  const std::string& input_text) {
  const ModelConfig& cfg = model.config();
  const std::string prediction = greedy_decode(model, vocab, input_text);

  // teacher-force the model's own output, with tracing on
  IdMatrix src = IdMatrix::zeros(1, cfg.max_in);
  auto src_ids = vocab.encode_input(input_text, cfg.max_in);
  for (int c = 0; c < cfg.max_in; ++c) src.at(0, c) = src_ids[static_cast<std::size_t>(c)];

  const int t_out = static_cast<int>(prediction.size()) + 1;  // BOS + chars
  IdMatrix tgt_in = IdMatrix::zeros(1, t_out);
  tgt_in.at(0, 0) = Vocab::kBos;
  for (std::size_t i = 0; i < prediction.size(); ++i)
    tgt_in.at(0, static_cast<int>(i) + 1) = vocab.id_of(prediction[i]);

  TraceCollector trace;
  model.forward(src, tgt_in, /*training=*/false, nullptr, &trace);

  const int t_in_real = static_cast<int>(input_text.size());
  const int t_out_real = static_cast<int>(prediction.size());

  json traces = json::array();
  for (const auto& t : trace.attention) {
    int rows = 0, cols = 0;
    if (t.role == "encoder-self") {
      rows = t_in_real;
      cols = t_in_real;
    } else if (t.role == "decoder-self") {
      rows = t_out_real;
      cols = t_out_real;
    } else {  // decoder-encoder
      rows = t_out_real;
      cols = t_in_real;
    }
    traces.push_back({{"role", t.role},
                      {"layer", t.layer},
                      {"head", t.head},
                      {"weights", trim_weights(t, rows, cols)}});
  }

  json act = nullptr;
  if (trace.encoder_act) {
    json n_updates = json::array();
    json remainders = json::array();
    for (int i = 0; i < t_in_real; ++i) {
      n_updates.push_back(trace.encoder_act->n_updates[static_cast<std::size_t>(i)]);
      remainders.push_back(trace.encoder_act->remainders[static_cast<std::size_t>(i)]);
    }
    act = json{{"n_updates", n_updates}, {"remainders", remainders}};
  }

  json j{{"input", chars_json(input_text)},
         {"output", chars_json(prediction)},
         {"traces", traces},
         {"act", act}};
  return j.dump(2);
}

void export_attention(const TransformerModel& model, const Vocab& vocab,
                      const std::string& input_text,
                      const std::string& out_path) {
  std::string text = attention_export_json(model, vocab, input_text);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + out_path + " for writing");
  out << text << '\n';
  if (!out) throw IoError("write failed for " + out_path);
}

}  // namespace mf
