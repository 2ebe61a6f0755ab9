#include "shepherd/core/types.hpp"

#include <cmath>

#include "shepherd/core/errors.hpp"

namespace shepherd {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::math_numeric:
      return "math_numeric";
    case TaskKind::code:
      return "code";
    case TaskKind::freeform:
      return "freeform";
  }
  return "freeform";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "math_numeric" || name == "math") return TaskKind::math_numeric;
  if (name == "code") return TaskKind::code;
  if (name == "freeform") return TaskKind::freeform;
  throw ConfigError("unknown task kind: " + std::string(name));
}

Query Query::make(std::string id, std::string_view text, TaskKind kind, std::optional<std::string> ground_truth,
                  std::string_view tokenizer_id) {
  Query q;
  q.id = std::move(id);
  q.prompt = tokenize(text, tokenizer_id);
  if (q.prompt.empty()) {
    throw ConfigError("query '" + q.id + "' has an empty prompt");
  }
  q.task_kind = kind;
  q.ground_truth = std::move(ground_truth);
  return q;
}

void DecodingParams::validate(std::size_t n_max) const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be a non-negative real");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("top_p must lie in (0, 1]");
  }
  if (max_new_tokens > n_max) {
    throw ConfigError("max_new_tokens " + std::to_string(max_new_tokens) + " exceeds N_max " + std::to_string(n_max));
  }
}

}  // namespace shepherd
