// Word-level vocabulary for the toy policy. Texts are sequences of
// space-separated vocabulary words.
#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/corpus.hpp"

namespace stagerl {

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Words must be unique and free of whitespace. Word 0 is the end token.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(TokenId id) const;
  TokenId id(std::string_view word) const;  // throws std::out_of_range
  bool contains(std::string_view word) const;
  TokenId end_token() const { return 0; }

  /// Whitespace-split words to ids; throws std::invalid_argument on an
  /// unknown word.
  std::vector<TokenId> encode(std::string_view text) const;

  /// Words joined by single spaces, end tokens omitted.
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, TokenId, std::less<>> index_;
};

}  // namespace stagerl
