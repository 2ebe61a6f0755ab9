#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "shepherd/core/tokens.hpp"

namespace shepherd {

enum class TaskKind { math_numeric, code, freeform };

std::string_view to_string(TaskKind kind);
/// Throws ConfigError for unknown names.
TaskKind parse_task_kind(std::string_view name);

struct Query {
  std::string id;
  TokenSequence prompt;
  TaskKind task_kind = TaskKind::math_numeric;
  std::optional<std::string> ground_truth;

  /// Tokenizes `text`; throws ConfigError if it is empty.
  static Query make(std::string id, std::string_view text, TaskKind kind,
                    std::optional<std::string> ground_truth = std::nullopt,
                    std::string_view tokenizer_id = kBuiltinTokenizer);

  const std::string& text() const { return prompt.text(); }
  friend bool operator==(const Query&, const Query&) = default;
};

/// Default ceiling on output tokens for a single model call.
inline constexpr std::size_t kDefaultMaxOutputTokens = 2048;

struct DecodingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  std::size_t max_new_tokens = kDefaultMaxOutputTokens;
  std::optional<std::uint64_t> seed;

  /// Greedy decoding used for hints and labeling.
  static DecodingParams deterministic(std::size_t budget) { return {0.0, 1.0, budget, std::nullopt}; }

  /// Throws ConfigError when temperature < 0, top_p outside (0, 1], or the
  /// budget exceeds `n_max`.
  void validate(std::size_t n_max) const;
  bool deterministic() const { return temperature == 0.0; }
};

}  // namespace shepherd
