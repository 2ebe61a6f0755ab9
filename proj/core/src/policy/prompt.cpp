#include "shepherd/policy/prompt.hpp"

namespace shepherd::policy {

namespace {
constexpr std::string_view kQuestionHeader = "Question: ";
constexpr std::string_view kHintHeader = "\nHint: ";
}  // namespace

std::string render_prompt(std::string_view question, std::optional<std::string_view> hint) {
  std::string out;
  out.reserve(kQuestionHeader.size() + question.size() + (hint ? hint->size() + kHintHeader.size() : 0));
  out += kQuestionHeader;
  out += question;
  if (hint) {
    out += kHintHeader;
    out += *hint;
  }
  return out;
}

ParsedPrompt parse_prompt(std::string_view prompt) {
  ParsedPrompt parsed;
  if (!prompt.starts_with(kQuestionHeader)) {
    parsed.question = std::string(prompt);
    return parsed;
  }
  prompt.remove_prefix(kQuestionHeader.size());
  if (const auto at = prompt.rfind(kHintHeader); at != std::string_view::npos) {
    parsed.question = std::string(prompt.substr(0, at));
    parsed.hint = std::string(prompt.substr(at + kHintHeader.size()));
  } else {
    parsed.question = std::string(prompt);
  }
  return parsed;
}

}  // namespace shepherd::policy
