#pragma once

#include <optional>
#include <string>
#include <vector>

#include "data/generator.hpp"
#include "data/obfuscate.hpp"

namespace mf {

// Corpus directory layout: train.tsv, test.tsv (one `input<TAB>target<TAB>type`
// line per sample) plus meta.json with the generating config, seed and
// per-type counts.

void write_dataset(const std::string& dir, const Dataset& ds,
                   const DatasetConfig* config,
                   const ObfuscationMap* applied_map = nullptr);

struct LoadedCorpus {
  std::vector<ExprSample> train;
  std::vector<ExprSample> test;
  std::optional<DatasetConfig> config;  // absent if meta.json is missing
};

LoadedCorpus load_corpus(const std::string& dir);
std::vector<ExprSample> read_samples_tsv(const std::string& path);
void write_samples_tsv(const std::string& path,
                       const std::vector<ExprSample>& samples);

ObfuscationMap read_obfuscation_map(const std::string& path);
void write_obfuscation_map(const std::string& path, const ObfuscationMap& map);

}  // namespace mf
