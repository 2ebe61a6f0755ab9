#include "shepherd/core/tokens.hpp"

#include <utility>

#include "shepherd/core/errors.hpp"

namespace shepherd {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

}  // namespace

TokenSequence::TokenSequence(std::vector<TokenId> ids, std::string text, std::vector<std::size_t> ends)
    : ids_(std::move(ids)), text_(std::move(text)), ends_(std::move(ends)) {
  if (ids_.size() != ends_.size()) {
    throw ConfigError("token ids and offsets differ in length");
  }
  std::size_t prev = 0;
  for (std::size_t e : ends_) {
    if (e < prev || e > text_.size()) {
      throw ConfigError("token offsets are not monotone within the text");
    }
    prev = e;
  }
  if (!ends_.empty() && ends_.back() != text_.size()) {
    throw ConfigError("tokens do not cover the text");
  }
}

std::string_view TokenSequence::piece(std::size_t i) const {
  if (i >= ids_.size()) {
    throw BoundsError("token index out of range");
  }
  const std::size_t begin = i == 0 ? 0 : ends_[i - 1];
  return std::string_view(text_).substr(begin, ends_[i] - begin);
}

TokenSequence prefix(const TokenSequence& x, std::ptrdiff_t n) {
  if (n < 0 || static_cast<std::size_t>(n) > x.size()) {
    throw BoundsError("prefix length " + std::to_string(n) + " outside [0, " + std::to_string(x.size()) + "]");
  }
  TokenSequence out;
  const auto count = static_cast<std::size_t>(n);
  out.ids_.assign(x.ids_.begin(), x.ids_.begin() + n);
  out.ends_.assign(x.ends_.begin(), x.ends_.begin() + n);
  out.text_ = x.text_.substr(0, count == 0 ? 0 : x.ends_[count - 1]);
  return out;
}

TokenSequence concat(const TokenSequence& x, const TokenSequence& y) {
  TokenSequence out = x;
  const std::size_t shift = x.text_.size();
  out.ids_.insert(out.ids_.end(), y.ids_.begin(), y.ids_.end());
  out.ends_.reserve(x.ends_.size() + y.ends_.size());
  for (std::size_t e : y.ends_) {
    out.ends_.push_back(e + shift);
  }
  out.text_ += y.text_;
  return out;
}

TokenSequence PieceTokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  std::vector<std::size_t> ends;
  std::size_t i = 0;
  std::size_t start = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i < n) {
      if (is_word(static_cast<unsigned char>(text[i]))) {
        while (i < n && is_word(static_cast<unsigned char>(text[i]))) {
          ++i;
        }
      } else {
        ++i;
      }
    }
    ids.push_back(fnv1a32(text.substr(start, i - start)));
    ends.push_back(i);
    start = i;
  }
  return TokenSequence(std::move(ids), std::string(text), std::move(ends));
}

TokenizerRegistry::TokenizerRegistry() { tokenizers_.emplace(std::string(kBuiltinTokenizer), std::make_shared<PieceTokenizer>()); }

TokenizerRegistry& TokenizerRegistry::global() {
  static TokenizerRegistry registry;
  return registry;
}

void TokenizerRegistry::add(std::shared_ptr<const Tokenizer> tokenizer) {
  if (!tokenizer) {
    throw ConfigError("null tokenizer");
  }
  std::lock_guard lock(mutex_);
  tokenizers_[std::string(tokenizer->name())] = std::move(tokenizer);
}

std::shared_ptr<const Tokenizer> TokenizerRegistry::get(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = tokenizers_.find(id);
  if (it == tokenizers_.end()) {
    throw ConfigError("unknown tokenizer: " + std::string(id));
  }
  return it->second;
}

bool TokenizerRegistry::contains(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return tokenizers_.find(id) != tokenizers_.end();
}

TokenSequence tokenize(std::string_view text, std::string_view tokenizer_id) {
  return TokenizerRegistry::global().get(tokenizer_id)->tokenize(text);
}

std::size_t token_count(std::string_view text, std::string_view tokenizer_id) {
  return tokenize(text, tokenizer_id).size();
}

std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 0x811c9dc5u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x01000193u;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

}  // namespace shepherd
