#include "data/generator.hpp"

#include <cmath>
#include <unordered_set>

#include "core/error.hpp"

namespace mf {

void DatasetConfig::validate() const {
  if (value_lo >= value_hi)
    throw ConfigError("value_lo must be below value_hi");
  if (ops.empty()) throw ConfigError("ops must not be empty");
  for (char c : ops)
    if (c != '+' && c != '-' && c != '*')
      throw ConfigError(std::string("unsupported op '") + c + "'");
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (ops.find(ops[i], i + 1) != std::string::npos)
      throw ConfigError("duplicate op in config");
  if (sample_count <= 0) throw ConfigError("sample_count must be positive");
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw ConfigError("split_ratio must be strictly between 0 and 1");
}

unsigned long long DatasetConfig::capacity() const {
  // values^2 * ops * 4 body forms * 2 assignment orders
  unsigned __int128 range = static_cast<unsigned __int128>(value_hi - value_lo);
  unsigned __int128 cap = range * range * ops.size() * 4u * 2u;
  const unsigned __int128 max64 = ~0ULL;
  return cap > max64 ? ~0ULL : static_cast<unsigned long long>(cap);
}

ExprSample gen_sample(Rng& rng, const DatasetConfig& config) {
  long long x = rng.next_in_range(config.value_lo, config.value_hi);
  long long y = rng.next_in_range(config.value_lo, config.value_hi);
  char op = config.ops[static_cast<std::size_t>(rng.next_below(config.ops.size()))];
  auto body = static_cast<BodyForm>(rng.next_below(4));
  auto order = static_cast<AssignOrder>(rng.next_below(2));
  return make_sample(x, y, op, body, order);
}

Dataset gen_dataset(const DatasetConfig& config) {
  config.validate();
  const unsigned long long cap = config.capacity();
  if (static_cast<unsigned long long>(config.sample_count) > cap)
    throw CapacityError("sample_count " + std::to_string(config.sample_count) +
                        " exceeds the " + std::to_string(cap) +
                        " distinct samples this config allows");

  Rng rng(config.seed);
  std::unordered_set<std::string> seen;
  seen.reserve(static_cast<std::size_t>(config.sample_count) * 2);
  std::vector<ExprSample> all;
  all.reserve(static_cast<std::size_t>(config.sample_count));
  while (static_cast<long long>(all.size()) < config.sample_count) {
    ExprSample s = gen_sample(rng, config);
    if (seen.insert(s.input_text).second) all.push_back(std::move(s));
  }

  // random membership, generation order preserved within each split
  const auto n = all.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(order);
  auto train_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * config.split_ratio));
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < train_count; ++i) in_train[order[i]] = true;

  Dataset ds;
  ds.train.reserve(train_count);
  ds.test.reserve(n - train_count);
  for (std::size_t i = 0; i < n; ++i) {
    auto& counts = in_train[i] ? ds.train_type_counts : ds.test_type_counts;
    counts[static_cast<std::size_t>(all[i].expr_type)]++;
    (in_train[i] ? ds.train : ds.test).push_back(std::move(all[i]));
  }
  return ds;
}

}  // namespace mf
