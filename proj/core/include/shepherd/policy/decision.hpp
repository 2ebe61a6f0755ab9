#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "shepherd/core/types.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/predictor/model.hpp"

namespace shepherd::policy {

enum class DecisionKind { slm_only, hint, full_llm };

std::string_view to_string(DecisionKind kind);

struct Decision {
  DecisionKind kind = DecisionKind::slm_only;
  /// Hint budget; 0 unless kind == hint.
  std::size_t hint_tokens = 0;
  /// Which rule fired, e.g. "p_below_alpha" or "consensus".
  std::string provenance;

  static Decision slm_only(std::string why) { return {DecisionKind::slm_only, 0, std::move(why)}; }
  static Decision hint(std::size_t n, std::string why) { return {DecisionKind::hint, n, std::move(why)}; }
  static Decision full_llm(std::string why) { return {DecisionKind::full_llm, 0, std::move(why)}; }

  friend bool operator==(const Decision&, const Decision&) = default;
};

void to_json(nlohmann::json& j, const Decision& d);

struct PolicyConfig {
  double alpha = 0.5;
  std::size_t eta_hint = 128;
  std::size_t n_max = kDefaultMaxOutputTokens;
  /// Reactive samples K and agreement quorum k.
  std::size_t K = 3;
  std::size_t k = 2;
  double sample_temperature = 0.3;
  double sample_top_p = 0.95;
  /// Decoding for final answers (SLM completion and full LLM responses).
  double completion_temperature = 0.3;
  double completion_top_p = 0.95;
  std::optional<std::uint64_t> completion_seed;
  std::size_t multisample = 8;

  /// Throws ConfigError unless alpha in [0,1], 1 <= k <= K and
  /// eta_hint <= n_max.
  void validate() const;
};

void to_json(nlohmann::json& j, const PolicyConfig& c);
void from_json(const nlohmann::json& j, PolicyConfig& c);

/// Hint budget for a predicted log-size: round(clip(exp(r) - 1, 0, n_max)),
/// with r clamped to log(1 + n_max) first so exp cannot overflow.
std::size_t hint_budget(double size_log, std::size_t n_max);

/// P < alpha -> SlmOnly; otherwise the budget decides: 0 -> SlmOnly,
/// (0, eta] -> Hint(n), > eta -> FullLlm. Throws ConfigError on NaN.
Decision map_to_decision(const predictor::Prediction& pred, const PolicyConfig& cfg);

/// n* = 0 -> SlmOnly, unsolvable -> FullLlm, otherwise Hint(n*).
Decision oracle_policy(const labeling::LabeledExample& example);

enum class StaticKind { slm_only, llm_only, fixed_fraction };

struct StaticPolicy {
  StaticKind kind = StaticKind::slm_only;
  /// Fraction of |h_l| requested as hint for fixed_fraction, in [0, 1].
  double fraction = 0.0;
};

/// fixed_fraction asks for floor(fraction * |h_l|) tokens; 0 means SlmOnly.
Decision static_decision(const StaticPolicy& policy, std::size_t full_llm_len);

}  // namespace shepherd::policy
