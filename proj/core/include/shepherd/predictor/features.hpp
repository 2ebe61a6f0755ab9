#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"
#include "shepherd/core/types.hpp"
#include "shepherd/labeling/labeling.hpp"

namespace shepherd::predictor {

enum class FeatureMode { proactive, reactive };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

/// Raw (unstandardized) scalar features of a query.
struct FeatureVector {
  double query_token_len = 0.0;
  std::optional<double> avg_entropy;
  std::optional<double> avg_output_len;

  /// [len] in proactive mode, [len, entropy, out_len] in reactive mode.
  Eigen::VectorXd values() const;
};

std::size_t feature_count(FeatureMode mode);

/// Proactive mode uses only |q|. Reactive mode averages over the K samples:
/// entropy is the mean of per-sample -mean(logprob) when every sample has
/// one, otherwise the share of samples disagreeing with the modal answer.
/// Throws ConfigError in reactive mode without samples.
FeatureVector extract_features(const Query& q, FeatureMode mode, std::span<const labeling::SlmSample> samples = {});

/// Convenience overload for live generations; answers are extracted from the
/// text with the query's task kind.
FeatureVector extract_features(const Query& q, FeatureMode mode,
                               std::span<const backends::GenerationResult> samples);

labeling::SlmSample to_sample(const Query& q, const backends::GenerationResult& result);

/// Per-feature z-scoring with statistics frozen from the training split.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  /// Population statistics; zero-variance features get stddev 1.
  static Standardizer fit(std::span<const Eigen::VectorXd> rows);
  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;
};

void to_json(nlohmann::json& j, const Standardizer& s);
void from_json(const nlohmann::json& j, Standardizer& s);

}  // namespace shepherd::predictor
