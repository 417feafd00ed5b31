#pragma once

#include <map>
#include <string>
#include <vector>

#include "data/expr.hpp"

namespace mf {

// Bijective character-to-character remapping. Demonstrates that the task
// depends on sequence structure, not glyph identity.
class ObfuscationMap {
 public:
  ObfuscationMap() = default;
  explicit ObfuscationMap(std::map<char, char> mapping);

  static ObfuscationMap identity(const std::string& domain);

  ObfuscationMap inverse() const;
  const std::map<char, char>& mapping() const { return map_; }

  // CoverageError if `text` contains a character outside the map's domain.
  std::string apply(const std::string& text) const;

 private:
  std::map<char, char> map_;
};

// Remaps input_text and target_text of every sample; types and values are
// metadata and stay as they are.
std::vector<ExprSample> obfuscate(const std::vector<ExprSample>& samples,
                                  const ObfuscationMap& map);

}  // namespace mf
