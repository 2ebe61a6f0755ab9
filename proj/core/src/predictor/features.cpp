#include "shepherd/predictor/features.hpp"

#include <cmath>
#include <map>

#include "shepherd/core/errors.hpp"
#include "shepherd/policy/answer.hpp"

namespace shepherd::predictor {

std::string_view to_string(FeatureMode mode) { return mode == FeatureMode::proactive ? "proactive" : "reactive"; }

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "proactive") return FeatureMode::proactive;
  if (name == "reactive") return FeatureMode::reactive;
  throw ConfigError("unknown feature mode: " + std::string(name));
}

std::size_t feature_count(FeatureMode mode) { return mode == FeatureMode::proactive ? 1 : 3; }

Eigen::VectorXd FeatureVector::values() const {
  if (!avg_entropy || !avg_output_len) return Eigen::VectorXd::Constant(1, query_token_len);
  Eigen::VectorXd v(3);
  v << query_token_len, *avg_entropy, *avg_output_len;
  return v;
}

FeatureVector extract_features(const Query& q, FeatureMode mode, std::span<const labeling::SlmSample> samples) {
  FeatureVector f;
  f.query_token_len = static_cast<double>(q.prompt.size());
  if (mode == FeatureMode::proactive) return f;
  if (samples.empty()) throw ConfigError("reactive features need at least one SLM sample");

  const double k = static_cast<double>(samples.size());
  double out_len = 0.0;
  bool all_entropy = true;
  double entropy = 0.0;
  for (const auto& s : samples) {
    out_len += static_cast<double>(s.output_tokens);
    if (s.entropy) {
      entropy += *s.entropy;
    } else {
      all_entropy = false;
    }
  }
  if (!all_entropy) {
    std::map<std::string, std::size_t> counts;
    std::size_t modal = 0;
    for (const auto& s : samples) modal = std::max(modal, ++counts[s.answer]);
    entropy = k - static_cast<double>(modal);
  }
  f.avg_entropy = entropy / k;
  f.avg_output_len = out_len / k;
  return f;
}

labeling::SlmSample to_sample(const Query& q, const backends::GenerationResult& result) {
  labeling::SlmSample s{policy::extract_answer(result.text, q.task_kind), result.tokens.size(), std::nullopt};
  if (result.token_logprobs && !result.token_logprobs->empty()) {
    double sum = 0.0;
    for (double lp : *result.token_logprobs) sum -= lp;
    s.entropy = sum / static_cast<double>(result.token_logprobs->size());
  }
  return s;
}

FeatureVector extract_features(const Query& q, FeatureMode mode,
                               std::span<const backends::GenerationResult> samples) {
  std::vector<labeling::SlmSample> converted;
  converted.reserve(samples.size());
  for (const auto& r : samples) converted.push_back(to_sample(q, r));
  return extract_features(q, mode, converted);
}

Standardizer Standardizer::fit(std::span<const Eigen::VectorXd> rows) {
  if (rows.empty()) throw ConfigError("cannot fit a standardizer on no rows");
  const auto dim = rows.front().size();
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& r : rows) s.mean += r;
  s.mean /= static_cast<double>(rows.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& r : rows) var += (r - s.mean).array().square().matrix();
  var /= static_cast<double>(rows.size());
  s.stddev = var.array().sqrt();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(s.stddev[i] > 1e-12)) s.stddev[i] = 1.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& raw) const {
  if (raw.size() != mean.size()) throw ConfigError("feature width does not match the standardizer");
  return ((raw - mean).array() / stddev.array()).matrix();
}

void to_json(nlohmann::json& j, const Standardizer& s) {
  j = {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
       {"stddev", std::vector<double>(s.stddev.data(), s.stddev.data() + s.stddev.size())}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != sd.size()) throw SchemaError("standardizer mean/stddev widths differ");
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.stddev = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
}

}  // namespace shepherd::predictor
