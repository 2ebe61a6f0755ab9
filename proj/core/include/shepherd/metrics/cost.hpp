#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shepherd/core/money.hpp"
#include "shepherd/labeling/labeling.hpp"

namespace shepherd::metrics {

/// Cost of answering with an n-token hint:
///   |q| 1[n > 0] c_l_in + n c_l_out + (|q| + n) c_s_in + |h_s^(n)(q)| c_s_out.
/// n = 0 charges only the SLM terms.
Money shepherding_cost(std::size_t q_len, std::size_t n, std::size_t aug_out_len, const CostModel& cm);

/// Full LLM response: |q| c_l_in + |h_l| c_l_out.
Money llm_cost(std::size_t q_len, std::size_t full_len, const CostModel& cm);

struct OracleCostInputs {
  std::size_t q_len = 0;
  std::size_t full_len = 0;
  std::size_t n_star = 0;
  /// |h_s(q)|: unhinted SLM output length.
  std::size_t slm_out_len = 0;
  /// |h_s^(n*)(q)|: SLM output length with the n*-token hint.
  std::size_t shep_slm_out_len = 0;
};

struct OracleCosts {
  Money route;
  Money casc;
  Money shep;
};

/// Closed-form costs of routing, cascading and shepherding under an oracle,
/// with I_s(q) = 1[n* = 0].
OracleCosts oracle_costs(const OracleCostInputs& in, const CostModel& cm);

/// Oracle inputs of a labeled example (|q| is the rendered prompt length).
OracleCostInputs oracle_inputs(const labeling::LabeledExample& ex);

struct DominanceViolation {
  std::size_t index = 0;
  std::string reason;
};

struct DominanceReport {
  std::size_t checked = 0;
  /// Queries with c_shep == c_route.
  std::size_t equalities = 0;
  std::vector<DominanceViolation> violations;
  Money total_route;
  Money total_shep;
  /// Sum over queries of c_route - c_shep.
  Money savings;

  bool ok() const { return violations.empty(); }
};

/// Checks c_shep <= c_route == c_casc per query, and that equality holds
/// exactly when n* is 0 or |h_l|. Throws ConfigError unless the SLM is free.
DominanceReport dominance_check(std::span<const OracleCostInputs> trace, const CostModel& cm);

}  // namespace shepherd::metrics
