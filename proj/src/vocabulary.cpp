#include "stagerl/vocabulary.hpp"

#include <sstream>
#include <stdexcept>

namespace stagerl {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const std::string& w = words_[i];
    if (w.empty() || w.find_first_of(" \t\n\r") != std::string::npos) {
      throw std::invalid_argument("vocabulary word " + std::to_string(i) + " is empty or contains whitespace");
    }
    if (!index_.emplace(w, static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary word '" + w + "'");
    }
  }
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  }
  return words_[id];
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw std::out_of_range("unknown word '" + std::string(word) + "'");
  return it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) {
    auto it = index_.find(w);
    if (it == index_.end()) throw std::invalid_argument("unknown word '" + w + "'");
    ids.push_back(it->second);
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId t : ids) {
    if (t == end_token()) continue;
    if (!out.empty()) out.push_back(' ');
    out += word(t);
  }
  return out;
}

}  // namespace stagerl
