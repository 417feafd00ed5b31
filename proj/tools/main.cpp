// Command-line front end. Everything goes through the C API in mathformer.h.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mathformer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int run_or_report(mf_status status) {
  if (status == MF_OK) return kExitOk;
  std::fprintf(stderr, "error (%s): %s\n", mf_status_name(status), mf_last_error());
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-level symbolic math with transformer variants"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mf_version());

  std::string config_path, out_path, data_dir, kind, model_path, report_path;
  std::string map_path, in_dir, input_text;

  auto* generate = app.add_subcommand("generate", "generate an expression corpus");
  generate->add_option("--config", config_path, "dataset config JSON")->required();
  generate->add_option("--out", out_path, "output corpus directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a corpus");
  train->add_option("--kind", kind, "model kind: t, ut or aut")->required();
  train->add_option("--data", data_dir, "corpus directory")->required();
  train->add_option("--config", config_path, "run config JSON (optional)");
  train->add_option("--out", out_path, "output directory for checkpoint and metrics")
      ->required();

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a test split");
  eval->add_option("--model", model_path, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "corpus directory")->required();
  eval->add_option("--report", report_path, "report JSON output path")->required();

  auto* attend = app.add_subcommand("attend", "export attention traces for one input");
  attend->add_option("--model", model_path, "checkpoint file")->required();
  attend->add_option("--input", input_text, "input expression string")->required();
  attend->add_option("--out", out_path, "trace JSON output path")->required();

  auto* obfuscate = app.add_subcommand("obfuscate", "remap corpus characters");
  obfuscate->add_option("--map", map_path, "obfuscation map JSON")->required();
  obfuscate->add_option("--in", in_dir, "input corpus directory")->required();
  obfuscate->add_option("--out", out_path, "output corpus directory")->required();

  auto* oracle = app.add_subcommand("oracle", "evaluate one expression exactly");
  oracle->add_option("input", input_text, "expression, e.g. x=85,y=-523,x*y")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage text to stderr
    return kExitUsage;
  }

  if (generate->parsed())
    return run_or_report(mf_generate(config_path.c_str(), out_path.c_str()));

  if (train->parsed())
    return run_or_report(mf_train(kind.c_str(), data_dir.c_str(),
                                  config_path.empty() ? nullptr : config_path.c_str(),
                                  out_path.c_str()));

  if (eval->parsed()) {
    mf_model* model = nullptr;
    mf_status status = mf_model_load(model_path.c_str(), &model);
    if (status == MF_OK)
      status = mf_model_evaluate(model, data_dir.c_str(), report_path.c_str());
    mf_model_free(model);
    return run_or_report(status);
  }

  if (attend->parsed()) {
    mf_model* model = nullptr;
    mf_status status = mf_model_load(model_path.c_str(), &model);
    if (status == MF_OK)
      status = mf_model_export_attention(model, input_text.c_str(), out_path.c_str());
    mf_model_free(model);
    return run_or_report(status);
  }

  if (obfuscate->parsed())
    return run_or_report(
        mf_obfuscate(map_path.c_str(), in_dir.c_str(), out_path.c_str()));

  if (oracle->parsed()) {
    char result[64];
    mf_status status = mf_oracle_eval(input_text.c_str(), result, sizeof(result));
    if (status != MF_OK) return run_or_report(status);
    std::printf("%s\n", result);
    return kExitOk;
  }

  return kExitUsage;
}
