#include "shepherd/policy/decision.hpp"

#include <cmath>

#include "shepherd/core/errors.hpp"

namespace shepherd::policy {

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::slm_only:
      return "slm_only";
    case DecisionKind::hint:
      return "hint";
    case DecisionKind::full_llm:
      return "full_llm";
  }
  return "slm_only";
}

void to_json(nlohmann::json& j, const Decision& d) {
  j = {{"variant", to_string(d.kind)}, {"hint_tokens", d.hint_tokens}, {"provenance", d.provenance}};
}

void PolicyConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (eta_hint > n_max) throw ConfigError("eta_hint must not exceed n_max");
  if (K == 0 || k == 0 || k > K) throw ConfigError("consensus needs 1 <= k <= K");
  if (sample_temperature < 0.0 || completion_temperature < 0.0) throw ConfigError("temperatures must be >= 0");
  if (multisample == 0) throw ConfigError("multisample must be positive");
}

void to_json(nlohmann::json& j, const PolicyConfig& c) {
  j = {{"alpha", c.alpha},
       {"eta_hint", c.eta_hint},
       {"n_max", c.n_max},
       {"K", c.K},
       {"k", c.k},
       {"sample_temperature", c.sample_temperature},
       {"sample_top_p", c.sample_top_p},
       {"completion_temperature", c.completion_temperature},
       {"completion_top_p", c.completion_top_p},
       {"multisample", c.multisample}};
  if (c.completion_seed) j["completion_seed"] = *c.completion_seed;
}

void from_json(const nlohmann::json& j, PolicyConfig& c) {
  PolicyConfig d;
  c.alpha = j.value("alpha", d.alpha);
  c.eta_hint = j.value("eta_hint", d.eta_hint);
  c.n_max = j.value("n_max", d.n_max);
  c.K = j.value("K", d.K);
  c.k = j.value("k", d.k);
  c.sample_temperature = j.value("sample_temperature", d.sample_temperature);
  c.sample_top_p = j.value("sample_top_p", d.sample_top_p);
  c.completion_temperature = j.value("completion_temperature", d.completion_temperature);
  c.completion_top_p = j.value("completion_top_p", d.completion_top_p);
  if (j.contains("completion_seed")) c.completion_seed = j.at("completion_seed").get<std::uint64_t>();
  c.multisample = j.value("multisample", d.multisample);
  c.validate();
}

std::size_t hint_budget(double size_log, std::size_t n_max) {
  if (std::isnan(size_log)) throw ConfigError("predicted size is NaN");
  const double cap = static_cast<double>(n_max);
  const double r = std::min(size_log, std::log1p(cap));
  const double n = std::clamp(std::expm1(r), 0.0, cap);
  return static_cast<std::size_t>(std::llround(n));
}

Decision map_to_decision(const predictor::Prediction& pred, const PolicyConfig& cfg) {
  if (std::isnan(pred.hint_prob)) throw ConfigError("hint probability is NaN");
  if (pred.hint_prob < cfg.alpha) return Decision::slm_only("p_below_alpha");
  const std::size_t n = hint_budget(pred.size_log, cfg.n_max);
  if (n == 0) return Decision::slm_only("size_rounds_to_zero");
  if (n <= cfg.eta_hint) return Decision::hint(n, "size_within_eta");
  return Decision::full_llm("size_above_eta");
}

Decision oracle_policy(const labeling::LabeledExample& example) {
  if (example.unsolvable) return Decision::full_llm("oracle_unsolvable");
  if (example.n_star == 0) return Decision::slm_only("oracle_no_hint");
  return Decision::hint(example.n_star, "oracle_min_hint");
}

Decision static_decision(const StaticPolicy& policy, std::size_t full_llm_len) {
  switch (policy.kind) {
    case StaticKind::slm_only:
      return Decision::slm_only("static_slm_only");
    case StaticKind::llm_only:
      return Decision::full_llm("static_llm_only");
    case StaticKind::fixed_fraction: {
      if (!(policy.fraction >= 0.0 && policy.fraction <= 1.0)) throw ConfigError("fraction must be in [0, 1]");
      const auto n = static_cast<std::size_t>(std::floor(policy.fraction * static_cast<double>(full_llm_len)));
      if (n == 0) return Decision::slm_only("static_fixed_fraction");
      return Decision::hint(n, "static_fixed_fraction");
    }
  }
  return Decision::slm_only("static_slm_only");
}

}  // namespace shepherd::policy
