#include "mathformer.h"

#include <cstring>
#include <memory>
#include <string>

#include "core/error.hpp"
#include "data/corpus_io.hpp"
#include "eval/attention_export.hpp"
#include "eval/evaluate.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"

struct mf_model {
  std::unique_ptr<mf::TransformerModel> model;
  mf::Vocab vocab;
};

namespace {

thread_local std::string g_last_error;

mf_status fail(mf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
mf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MF_OK;
  } catch (const mf::ParseError& e) {
    return fail(MF_ERR_PARSE, e.what());
  } catch (const mf::SemanticError& e) {
    return fail(MF_ERR_PARSE, e.what());
  } catch (const mf::ConfigError& e) {
    return fail(MF_ERR_CONFIG, e.what());
  } catch (const mf::CapacityError& e) {
    return fail(MF_ERR_CAPACITY, e.what());
  } catch (const mf::IoError& e) {
    return fail(MF_ERR_IO, e.what());
  } catch (const mf::NumericError& e) {
    return fail(MF_ERR_NUMERIC, e.what());
  } catch (const mf::DivergenceError& e) {
    return fail(MF_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(MF_ERR_RUNTIME, e.what());
  }
}

mf_status require(bool ok, const char* what) {
  return ok ? MF_OK : fail(MF_ERR_USAGE, std::string("invalid argument: ") + what);
}

mf_status copy_out(const std::string& s, char* out, size_t out_size) {
  if (s.size() + 1 > out_size)
    return fail(MF_ERR_USAGE, "output buffer of " + std::to_string(out_size) +
                                  " bytes too small for " +
                                  std::to_string(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return MF_OK;
}

std::array<long long, mf::kNumExprTypes> count_types(
    const std::vector<mf::ExprSample>& samples) {
  std::array<long long, mf::kNumExprTypes> counts{};
  for (const auto& s : samples) counts[static_cast<std::size_t>(s.expr_type)]++;
  return counts;
}

}  // namespace

extern "C" {

const char* mf_version(void) { return "1.0.0"; }

const char* mf_status_name(mf_status status) {
  switch (status) {
    case MF_OK: return "ok";
    case MF_ERR_USAGE: return "usage";
    case MF_ERR_PARSE: return "parse";
    case MF_ERR_CONFIG: return "config";
    case MF_ERR_CAPACITY: return "capacity";
    case MF_ERR_IO: return "io";
    case MF_ERR_NUMERIC: return "numeric";
    case MF_ERR_RUNTIME: return "runtime";
  }
  return "unknown";
}

const char* mf_last_error(void) { return g_last_error.c_str(); }

mf_status mf_oracle_eval(const char* input_text, char* out, size_t out_size) {
  if (mf_status s = require(input_text && out && out_size > 0, "mf_oracle_eval"))
    return s;
  std::string result;
  if (mf_status s = guarded([&] { result = mf::oracle_eval(input_text); }))
    return s;
  return copy_out(result, out, out_size);
}

mf_status mf_generate(const char* dataset_config_json_path, const char* out_dir) {
  if (mf_status s = require(dataset_config_json_path && out_dir, "mf_generate"))
    return s;
  return guarded([&] {
    mf::DatasetConfig config = mf::load_dataset_config(dataset_config_json_path);
    mf::Dataset ds = mf::gen_dataset(config);
    mf::write_dataset(out_dir, ds, &config);
  });
}

mf_status mf_obfuscate(const char* map_json_path, const char* in_dir,
                       const char* out_dir) {
  if (mf_status s = require(map_json_path && in_dir && out_dir, "mf_obfuscate"))
    return s;
  return guarded([&] {
    mf::ObfuscationMap map = mf::read_obfuscation_map(map_json_path);
    mf::LoadedCorpus corpus = mf::load_corpus(in_dir);
    mf::Dataset ds;
    ds.train = mf::obfuscate(corpus.train, map);
    ds.test = mf::obfuscate(corpus.test, map);
    ds.train_type_counts = count_types(ds.train);
    ds.test_type_counts = count_types(ds.test);
    mf::write_dataset(out_dir, ds, corpus.config ? &*corpus.config : nullptr, &map);
  });
}

mf_status mf_train(const char* kind, const char* data_dir,
                   const char* run_config_json_path, const char* out_dir) {
  if (mf_status s = require(kind && data_dir && out_dir, "mf_train")) return s;
  return guarded([&] {
    mf::ModelKind model_kind = mf::model_kind_from_name(kind);
    mf::RunConfig config;
    if (run_config_json_path) config = mf::load_run_config(run_config_json_path);
    if (model_kind == mf::ModelKind::AdaptiveUniversal) config.ut.act_enabled = true;
    mf::LoadedCorpus corpus = mf::load_corpus(data_dir);
    auto model = mf::build_variant(model_kind, config.model, config.ut,
                                   config.train.seed);
    mf::fit(*model, corpus.train, corpus.test, config.train, out_dir);
  });
}

mf_status mf_model_load(const char* checkpoint_path, mf_model** out_model) {
  if (mf_status s = require(checkpoint_path && out_model, "mf_model_load"))
    return s;
  return guarded([&] {
    mf::LoadedCheckpoint loaded = mf::load_checkpoint(checkpoint_path);
    auto* handle = new mf_model;
    handle->model = std::move(loaded.model);
    *out_model = handle;
  });
}

void mf_model_free(mf_model* model) { delete model; }

mf_status mf_model_kind(const mf_model* model, char* out, size_t out_size) {
  if (mf_status s = require(model && out, "mf_model_kind")) return s;
  return copy_out(mf::model_kind_name(model->model->kind()), out, out_size);
}

mf_status mf_model_predict(const mf_model* model, const char* input_text,
                           char* out, size_t out_size) {
  if (mf_status s = require(model && input_text && out, "mf_model_predict"))
    return s;
  std::string prediction;
  if (mf_status s = guarded([&] {
        prediction = mf::greedy_decode(*model->model, model->vocab, input_text);
      }))
    return s;
  return copy_out(prediction, out, out_size);
}

mf_status mf_model_evaluate(const mf_model* model, const char* data_dir,
                            const char* report_json_path) {
  if (mf_status s =
          require(model && data_dir && report_json_path, "mf_model_evaluate"))
    return s;
  return guarded([&] {
    mf::LoadedCorpus corpus = mf::load_corpus(data_dir);
    mf::EvalReport report = mf::score(*model->model, model->vocab, corpus.test);
    report.save(report_json_path);
  });
}

mf_status mf_model_export_attention(const mf_model* model,
                                    const char* input_text,
                                    const char* out_json_path) {
  if (mf_status s = require(model && input_text && out_json_path,
                            "mf_model_export_attention"))
    return s;
  return guarded([&] {
    mf::export_attention(*model->model, model->vocab, input_text, out_json_path);
  });
}

}  // extern "C"
