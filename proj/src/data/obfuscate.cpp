#include "data/obfuscate.hpp"

#include <set>

#include "core/error.hpp"

namespace mf {

ObfuscationMap::ObfuscationMap(std::map<char, char> mapping)
    : map_(std::move(mapping)) {
  std::set<char> images;
  for (auto [from, to] : map_)
    if (!images.insert(to).second)
      throw ConfigError(std::string("obfuscation map is not injective: '") +
                        to + "' appears twice");
}

ObfuscationMap ObfuscationMap::identity(const std::string& domain) {
  std::map<char, char> m;
  for (char c : domain) m[c] = c;
  return ObfuscationMap(std::move(m));
}

ObfuscationMap ObfuscationMap::inverse() const {
  std::map<char, char> inv;
  for (auto [from, to] : map_) inv[to] = from;
  return ObfuscationMap(std::move(inv));
}

std::string ObfuscationMap::apply(const std::string& text) const {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    auto it = map_.find(c);
    if (it == map_.end())
      throw CoverageError(std::string("obfuscation map does not cover '") + c + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<ExprSample> obfuscate(const std::vector<ExprSample>& samples,
                                  const ObfuscationMap& map) {
  std::vector<ExprSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    ExprSample o = s;
    o.input_text = map.apply(s.input_text);
    o.target_text = map.apply(s.target_text);
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace mf
