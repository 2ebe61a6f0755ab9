#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "shepherd/core/types.hpp"

namespace shepherd::policy {

/// Canonical final answer of a response.
///
/// - math_numeric: the last number in the text with thousands separators
///   removed and trailing fractional zeros dropped ("1,234.50" -> "1234.5");
///   empty when the text has no digits.
/// - code: body of the last fenced ``` block, or the trimmed text if unfenced.
/// - freeform: the trimmed text.
std::string extract_answer(std::string_view text, TaskKind kind);

/// Normalization applied to numeric answers (also used on ground truth).
std::string normalize_number(std::string_view number);

/// The modal answer if it occurs at least `k` times, else nullopt. Ties among
/// answers with equal counts go to the earliest first occurrence. Empty
/// answers (nothing extractable) never form a consensus.
std::optional<std::string> consensus(std::span<const std::string> answers, std::size_t k);

}  // namespace shepherd::policy
