#pragma once

#include <array>
#include <string>
#include <vector>

namespace mf {

// Character-level vocabulary: PAD, BOS, EOS followed by the expression
// alphabet. The mapping is fixed; ids are stable across runs and files.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  Vocab();

  int size() const { return static_cast<int>(id_to_char_.size()); }
  bool is_special(int id) const { return id >= 0 && id < kFirstChar; }

  int id_of(char c) const;      // VocabError for unknown characters
  char char_of(int id) const;   // IndexError for specials / out of range

  // Inputs are right-padded with PAD, no BOS/EOS. LengthError if the text
  // does not fit.
  std::vector<int> encode_input(const std::string& text, int max_len) const;
  // Targets are wrapped BOS ... EOS and right-padded with PAD; the text must
  // satisfy length + 2 <= max_len.
  std::vector<int> encode_target(const std::string& text, int max_len) const;
  // Drops PAD/BOS/EOS and maps the remaining ids back to characters.
  std::string decode(const std::vector<int>& ids) const;

  // The non-special characters in id order.
  const std::string& alphabet() const { return alphabet_; }

 private:
  static constexpr int kFirstChar = 3;
  std::string alphabet_;
  std::vector<char> id_to_char_;      // '\0' for specials
  std::array<int, 256> char_to_id_;   // -1 for unknown
};

}  // namespace mf
