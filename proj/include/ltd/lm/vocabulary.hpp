#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ltd {

using TokenId = std::int32_t;

inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kNewlineToken = "\n";

// Whitespace + punctuation tokenizer. Every ASCII punctuation character other
// than '_' is its own token; line breaks inside a document become "\n".
std::vector<std::string> tokenize(std::string_view text);

// Splits text into documents at runs of blank lines.
std::vector<std::string_view> split_documents(std::string_view text);

class Vocabulary {
 public:
  // Keeps the max_size - 2 most frequent tokens (ties by byte order), then
  // appends eos and unk. Throws std::invalid_argument("empty corpus").
  static Vocabulary build(std::string_view corpus_text, std::size_t max_size);
  // tokens must end with eos, unk.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId eos_id() const { return eos_id_; }
  TokenId unk_id() const { return unk_id_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  TokenId id_of(std::string_view tok) const;

  std::vector<TokenId> encode(std::string_view text) const;
  // Encodes every document and terminates each with eos.
  std::vector<TokenId> encode_documents(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_id_ = 0;
  TokenId unk_id_ = 0;
};

}  // namespace ltd
