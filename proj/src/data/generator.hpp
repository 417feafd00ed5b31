#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "data/expr.hpp"

namespace mf {

struct DatasetConfig {
  long long value_lo = -1000;  // half-open [value_lo, value_hi)
  long long value_hi = 1000;
  std::string ops = "+-*";     // subset of "+-*"
  long long sample_count = 100000;
  double split_ratio = 0.9;    // train fraction
  std::uint64_t seed = 1;

  void validate() const;
  // Number of distinct input strings this config can produce.
  unsigned long long capacity() const;
};

struct Dataset {
  std::vector<ExprSample> train;
  std::vector<ExprSample> test;
  std::array<long long, kNumExprTypes> train_type_counts{};
  std::array<long long, kNumExprTypes> test_type_counts{};
};

// One uniform draw over (x, y, op, body form, assignment order).
ExprSample gen_sample(Rng& rng, const DatasetConfig& config);

// Draws until sample_count distinct input strings exist (rejection on
// duplicates), then randomly partitions them into train/test at split_ratio.
// Fully determined by config.seed. CapacityError when sample_count exceeds
// capacity().
Dataset gen_dataset(const DatasetConfig& config);

}  // namespace mf
