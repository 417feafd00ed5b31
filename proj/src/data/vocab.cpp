#include "data/vocab.hpp"

#include "core/error.hpp"

namespace mf {

Vocab::Vocab() : alphabet_("0123456789-+*=,xy") {
  id_to_char_.assign(kFirstChar, '\0');
  char_to_id_.fill(-1);
  for (char c : alphabet_) {
    char_to_id_[static_cast<unsigned char>(c)] = static_cast<int>(id_to_char_.size());
    id_to_char_.push_back(c);
  }
}

int Vocab::id_of(char c) const {
  int id = char_to_id_[static_cast<unsigned char>(c)];
  if (id < 0)
    throw VocabError(std::string("character '") + c + "' not in vocabulary");
  return id;
}

char Vocab::char_of(int id) const {
  if (id < kFirstChar || id >= size())
    throw IndexError("no character for token id " + std::to_string(id));
  return id_to_char_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode_input(const std::string& text, int max_len) const {
  if (static_cast<int>(text.size()) > max_len)
    throw LengthError("input of length " + std::to_string(text.size()) +
                      " exceeds max_len " + std::to_string(max_len));
  std::vector<int> ids(static_cast<std::size_t>(max_len), kPad);
  for (std::size_t i = 0; i < text.size(); ++i) ids[i] = id_of(text[i]);
  return ids;
}

std::vector<int> Vocab::encode_target(const std::string& text, int max_len) const {
  if (static_cast<int>(text.size()) + 2 > max_len)
    throw LengthError("target of length " + std::to_string(text.size()) +
                      " exceeds max_len " + std::to_string(max_len) +
                      " with BOS/EOS");
  std::vector<int> ids(static_cast<std::size_t>(max_len), kPad);
  ids[0] = kBos;
  for (std::size_t i = 0; i < text.size(); ++i) ids[i + 1] = id_of(text[i]);
  ids[text.size() + 1] = kEos;
  return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (is_special(id)) continue;
    out.push_back(char_of(id));
  }
  return out;
}

}  // namespace mf
