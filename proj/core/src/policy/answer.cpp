#include "shepherd/policy/answer.hpp"

#include <cctype>
#include <unordered_map>
#include <vector>

#include "shepherd/core/errors.hpp"

namespace shepherd::policy {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Last match of -?\d[\d,]*(\.\d+)? in the text.
std::string_view last_number(std::string_view text) {
  std::string_view best;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > 0 && text[begin - 1] == '-') --begin;
    while (i < text.size() && (is_digit(text[i]) || text[i] == ',')) ++i;
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
    }
    best = text.substr(begin, i - begin);
  }
  return best;
}

}  // namespace

std::string normalize_number(std::string_view number) {
  std::string out;
  out.reserve(number.size());
  for (char c : trim(number)) {
    if (c != ',') out.push_back(c);
  }
  bool negative = !out.empty() && out.front() == '-';
  if (negative) out.erase(out.begin());
  if (const auto dot = out.find('.'); dot != std::string::npos) {
    while (!out.empty() && out.back() == '0') out.pop_back();
    if (!out.empty() && out.back() == '.') out.pop_back();
  }
  std::size_t lead = 0;
  while (lead + 1 < out.size() && out[lead] == '0' && out[lead + 1] != '.') ++lead;
  out.erase(0, lead);
  if (out.empty()) out = "0";
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

std::string extract_answer(std::string_view text, TaskKind kind) {
  switch (kind) {
    case TaskKind::math_numeric: {
      const std::string_view number = last_number(text);
      return number.empty() ? std::string() : normalize_number(number);
    }
    case TaskKind::code: {
      const std::size_t close = text.rfind("```");
      if (close != std::string_view::npos && close > 0) {
        const std::size_t open = text.rfind("```", close - 1);
        if (open != std::string_view::npos && open + 3 <= close) {
          std::string_view body = text.substr(open + 3, close - open - 3);
          // Drop the language tag line, e.g. ```python
          if (const auto nl = body.find('\n'); nl != std::string_view::npos) {
            const std::string_view tag = body.substr(0, nl);
            bool is_tag = true;
            for (char c : tag) {
              if (std::isspace(static_cast<unsigned char>(c))) {
                is_tag = false;
                break;
              }
            }
            if (is_tag) body.remove_prefix(nl + 1);
          }
          return std::string(trim(body));
        }
      }
      return std::string(trim(text));
    }
    case TaskKind::freeform:
      return std::string(trim(text));
  }
  return std::string(trim(text));
}

std::optional<std::string> consensus(std::span<const std::string> answers, std::size_t k) {
  if (k == 0) {
    throw ConfigError("consensus quorum k must be at least 1");
  }
  std::unordered_map<std::string_view, std::size_t> counts;
  std::vector<std::string_view> order;
  for (const auto& a : answers) {
    if (a.empty()) continue;
    if (counts[a]++ == 0) order.push_back(a);
  }
  std::string_view best;
  std::size_t best_count = 0;
  for (std::string_view a : order) {
    if (counts[a] > best_count) {
      best = a;
      best_count = counts[a];
    }
  }
  if (best_count >= k) return std::string(best);
  return std::nullopt;
}

}  // namespace shepherd::policy
