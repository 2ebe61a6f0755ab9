#include "shepherd/metrics/cost.hpp"

#include "shepherd/core/errors.hpp"

namespace shepherd::metrics {

Money shepherding_cost(std::size_t q_len, std::size_t n, std::size_t aug_out_len, const CostModel& cm) {
  Money c;
  if (n > 0) c += charge(q_len, cm.llm_in) + charge(n, cm.llm_out);
  c += charge(q_len + n, cm.slm_in) + charge(aug_out_len, cm.slm_out);
  return c;
}

Money llm_cost(std::size_t q_len, std::size_t full_len, const CostModel& cm) {
  return charge(q_len, cm.llm_in) + charge(full_len, cm.llm_out);
}

OracleCosts oracle_costs(const OracleCostInputs& in, const CostModel& cm) {
  const bool slm_ok = in.n_star == 0;
  const Money slm = charge(in.q_len, cm.slm_in) + charge(in.slm_out_len, cm.slm_out);
  const Money llm = llm_cost(in.q_len, in.full_len, cm);
  OracleCosts out;
  out.route = slm_ok ? slm : llm;
  out.casc = slm_ok ? slm : slm + llm;
  out.shep = shepherding_cost(in.q_len, in.n_star, in.shep_slm_out_len, cm);
  return out;
}

OracleCostInputs oracle_inputs(const labeling::LabeledExample& ex) {
  OracleCostInputs in;
  in.q_len = ex.prompt_tokens;
  in.full_len = ex.full_llm_len;
  in.n_star = ex.n_star;
  if (!ex.slm_output_tokens.empty()) {
    in.slm_out_len = ex.slm_output_tokens.front();
    in.shep_slm_out_len = in.slm_out_len;
    for (std::size_t i = 0; i < ex.grid.size() && i < ex.slm_output_tokens.size(); ++i) {
      if (ex.grid[i] == ex.n_star) in.shep_slm_out_len = ex.slm_output_tokens[i];
    }
  }
  return in;
}

DominanceReport dominance_check(std::span<const OracleCostInputs> trace, const CostModel& cm) {
  if (!cm.slm_free()) throw ConfigError("dominance_check requires a free SLM (c_s_in = c_s_out = 0)");
  DominanceReport rep;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& in = trace[i];
    const auto c = oracle_costs(in, cm);
    ++rep.checked;
    rep.total_route += c.route;
    rep.total_shep += c.shep;
    rep.savings += c.route - c.shep;
    if (in.n_star > in.full_len) {
      rep.violations.push_back({i, "n_star exceeds |h_l|"});
      continue;
    }
    if (c.route != c.casc) rep.violations.push_back({i, "route != casc"});
    if (c.shep > c.route) rep.violations.push_back({i, "shep > route"});
    const bool equal = c.shep == c.route;
    const bool boundary = in.n_star == 0 || in.n_star == in.full_len;
    if (equal) ++rep.equalities;
    if (equal != boundary) rep.violations.push_back({i, equal ? "equal costs off the boundary" : "strict saving at the boundary"});
  }
  return rep;
}

}  // namespace shepherd::metrics
