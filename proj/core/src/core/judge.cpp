#include "shepherd/core/judge.hpp"

#include "shepherd/core/errors.hpp"
#include "shepherd/policy/answer.hpp"

namespace shepherd {

QualityJudge::QualityJudge(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("quality threshold must lie in (0, 1]");
  }
}

double ExactMatchJudge::score(const Query& query, std::string_view response) const {
  if (!query.ground_truth) {
    throw ConfigError("query '" + query.id + "' has no ground truth to judge against");
  }
  const std::string answer = policy::extract_answer(response, query.task_kind);
  const std::string truth = query.task_kind == TaskKind::math_numeric
                                ? policy::normalize_number(*query.ground_truth)
                                : policy::extract_answer(*query.ground_truth, query.task_kind);
  return !answer.empty() && answer == truth ? 1.0 : 0.0;
}

}  // namespace shepherd
