#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace shepherd::policy {

/// "Question: {q}" followed by "\nHint: {hint}" when a hint is present.
std::string render_prompt(std::string_view question, std::optional<std::string_view> hint = std::nullopt);

struct ParsedPrompt {
  std::string question;
  std::optional<std::string> hint;
};

/// Inverse of render_prompt. Text without the "Question: " header is taken
/// verbatim as the question.
ParsedPrompt parse_prompt(std::string_view prompt);

}  // namespace shepherd::policy
