#include "ltd/lm/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace ltd {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) {
  return c != '_' && std::ispunct(static_cast<unsigned char>(c)) != 0;
}

void tokenize_line(std::string_view line, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.emplace_back(1, c);
      ++i;
    } else {
      std::size_t j = i;
      while (j < line.size() && !is_space(line[j]) && !is_punct(line[j])) ++j;
      out.emplace_back(line.substr(i, j - i));
      i = j;
    }
  }
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  bool first = true;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    if (!blank(line)) {
      if (!first) out.emplace_back(kNewlineToken);
      tokenize_line(line, out);
      first = false;
    }
    start = end + 1;
  }
  return out;
}

std::vector<std::string_view> split_documents(std::string_view text) {
  std::vector<std::string_view> docs;
  std::size_t start = 0;
  std::size_t doc_begin = std::string_view::npos;
  std::size_t doc_end = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    if (blank(line)) {
      if (doc_begin != std::string_view::npos) {
        docs.push_back(text.substr(doc_begin, doc_end - doc_begin));
        doc_begin = std::string_view::npos;
      }
    } else {
      if (doc_begin == std::string_view::npos) doc_begin = start;
      doc_end = end;
    }
    start = end + 1;
  }
  if (doc_begin != std::string_view::npos) docs.push_back(text.substr(doc_begin, doc_end - doc_begin));
  return docs;
}

Vocabulary Vocabulary::build(std::string_view corpus_text, std::size_t max_size) {
  if (max_size < 3) throw std::invalid_argument("vocabulary max_size must be >= 3");
  std::map<std::string, std::size_t> counts;
  for (auto& tok : tokenize(corpus_text)) ++counts[tok];
  if (counts.empty()) throw std::invalid_argument("empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - 2);
  std::vector<std::string> tokens;
  tokens.reserve(keep + 2);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  tokens.emplace_back(kEosToken);
  tokens.emplace_back(kUnkToken);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[tokens.size() - 2] != kEosToken ||
      tokens.back() != kUnkToken) {
    throw std::invalid_argument("vocabulary must end with eos and unk");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token");
    }
  }
  v.eos_id_ = static_cast<TokenId>(v.tokens_.size() - 2);
  v.unk_id_ = static_cast<TokenId>(v.tokens_.size() - 1);
  return v;
}

TokenId Vocabulary::id_of(std::string_view tok) const {
  auto it = index_.find(std::string(tok));
  return it == index_.end() ? unk_id_ : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(id_of(tok));
  return ids;
}

std::vector<TokenId> Vocabulary::encode_documents(std::string_view text) const {
  std::vector<TokenId> ids;
  for (auto doc : split_documents(text)) {
    auto part = encode(doc);
    ids.insert(ids.end(), part.begin(), part.end());
    ids.push_back(eos_id_);
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  bool line_start = true;
  for (TokenId id : ids) {
    const std::string& tok = token(id);
    if (tok == kNewlineToken) {
      out += '\n';
      line_start = true;
      continue;
    }
    if (!line_start) out += ' ';
    out += tok;
    line_start = false;
  }
  return out;
}

}  // namespace ltd
