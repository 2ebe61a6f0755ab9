#pragma once

#include <string_view>

#include "shepherd/core/types.hpp"

namespace shepherd {

/// Quality function phi(q, response) in [0, 1] with satisfaction threshold tau.
class QualityJudge {
 public:
  explicit QualityJudge(double threshold = 1.0);
  virtual ~QualityJudge() = default;

  virtual double score(const Query& query, std::string_view response) const = 0;

  double threshold() const { return threshold_; }
  bool satisfactory(const Query& query, std::string_view response) const {
    return score(query, response) >= threshold_;
  }

 private:
  double threshold_;
};

/// Binary judge: 1 when the extracted answer equals the query's ground truth.
/// Numeric ground truth is normalized the same way as extracted answers.
class ExactMatchJudge final : public QualityJudge {
 public:
  explicit ExactMatchJudge(double threshold = 1.0) : QualityJudge(threshold) {}

  /// Throws ConfigError when the query has no ground truth.
  double score(const Query& query, std::string_view response) const override;
};

}  // namespace shepherd
