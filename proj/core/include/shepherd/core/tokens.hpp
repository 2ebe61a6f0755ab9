#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace shepherd {

using TokenId = std::uint32_t;

/// Tokenized text. Each token owns a contiguous byte range of `text()`, so a
/// prefix of n tokens is also a prefix of the text.
class TokenSequence {
 public:
  TokenSequence() = default;
  /// `ends[i]` is the exclusive end offset of token i in `text`.
  TokenSequence(std::vector<TokenId> ids, std::string text, std::vector<std::size_t> ends);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<TokenId>& ids() const { return ids_; }
  const std::string& text() const { return text_; }
  std::string_view piece(std::size_t i) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  friend TokenSequence prefix(const TokenSequence&, std::ptrdiff_t);
  friend TokenSequence concat(const TokenSequence&, const TokenSequence&);

  std::vector<TokenId> ids_;
  std::string text_;
  std::vector<std::size_t> ends_;
};

/// First n tokens of x. Throws BoundsError unless 0 <= n <= |x|.
TokenSequence prefix(const TokenSequence& x, std::ptrdiff_t n);

/// x followed by y; |x ++ y| == |x| + |y|. Tokens are not re-merged.
TokenSequence concat(const TokenSequence& x, const TokenSequence& y);

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string_view name() const = 0;
  virtual TokenSequence tokenize(std::string_view text) const = 0;
};

/// Deterministic whitespace-plus-punctuation piece tokenizer.
///
/// A token is an optional run of leading whitespace followed by either a run
/// of word bytes (ASCII alphanumerics, '_' and any byte >= 0x80) or a single
/// punctuation byte. Trailing whitespace forms its own token. Concatenating
/// the pieces reproduces the input exactly. Ids are FNV-1a hashes of pieces.
class PieceTokenizer final : public Tokenizer {
 public:
  std::string_view name() const override { return "builtin"; }
  TokenSequence tokenize(std::string_view text) const override;
};

inline constexpr std::string_view kBuiltinTokenizer = "builtin";

/// Process-wide tokenizer lookup. "builtin" is always registered.
class TokenizerRegistry {
 public:
  static TokenizerRegistry& global();

  void add(std::shared_ptr<const Tokenizer> tokenizer);
  /// Throws ConfigError for unknown ids.
  std::shared_ptr<const Tokenizer> get(std::string_view id) const;
  bool contains(std::string_view id) const;

 private:
  TokenizerRegistry();

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Tokenizer>, std::less<>> tokenizers_;
};

/// Tokenize with a registered tokenizer.
TokenSequence tokenize(std::string_view text, std::string_view tokenizer_id = kBuiltinTokenizer);

/// |tokenize(text)| under a registered tokenizer.
std::size_t token_count(std::string_view text, std::string_view tokenizer_id = kBuiltinTokenizer);

/// 32-bit FNV-1a.
std::uint32_t fnv1a32(std::string_view bytes);
/// 64-bit FNV-1a, optionally continuing from a previous state.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace shepherd
