#include "shepherd/metrics/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "shepherd/core/errors.hpp"
#include "shepherd/metrics/cost.hpp"
#include "shepherd/policy/answer.hpp"

namespace shepherd::metrics {

using policy::Decision;
using policy::DecisionKind;

ValidationRecord make_record(const labeling::LabeledExample& ex, const predictor::Prediction& pred) {
  ValidationRecord rec;
  rec.prediction = pred;
  rec.q_len = ex.prompt_tokens;
  rec.full_len = ex.full_llm_len;
  rec.grid = ex.grid;
  rec.grid_correct = ex.per_budget_correct;
  rec.grid_out_len = ex.slm_output_tokens;
  rec.grid_out_len.resize(rec.grid.size(), 0);
  rec.llm_correct = ex.llm_correct;
  rec.full_hint_correct = ex.full_hint_correct;
  return rec;
}

namespace {

std::optional<std::string> modal_answer(const std::vector<labeling::SlmSample>& samples) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : samples) {
    if (!s.answer.empty()) ++counts[s.answer];
  }
  std::optional<std::string> best;
  std::size_t top = 0;
  for (const auto& s : samples) {
    if (!s.answer.empty() && counts[s.answer] > top) {
      top = counts[s.answer];
      best = s.answer;
    }
  }
  return best;
}

}  // namespace

ValidationRecord make_record(const labeling::LabeledExample& ex, const predictor::Predictor& model,
                             const policy::PolicyConfig& pc, const CostModel& cm, const QualityJudge& judge) {
  const bool reactive = model.mode() == predictor::FeatureMode::reactive;
  std::span<const labeling::SlmSample> samples;
  if (reactive) samples = ex.slm_samples;
  auto rec = make_record(ex, reactive && !samples.empty() ? model.predict(ex.query, samples)
                                                                   : model.predict(ex.query));
  if (!reactive) return rec;
  std::vector<std::string> answers;
  for (const auto& s : ex.slm_samples) {
    answers.push_back(s.answer);
    rec.sample_cost += charge(ex.prompt_tokens, cm.slm_in) + charge(s.output_tokens, cm.slm_out);
  }
  if (const auto agreed = policy::consensus(answers, pc.k)) {
    rec.consensus_hit = true;
    rec.consensus_correct = judge.satisfactory(ex.query, *agreed);
  } else if (const auto modal = modal_answer(ex.slm_samples)) {
    rec.modal_correct = judge.satisfactory(ex.query, *modal);
  } else {
    rec.modal_correct = false;
  }
  return rec;
}

ScoredOutcome score(const ValidationRecord& rec, const Decision& d, const CostModel& cm) {
  if (rec.consensus_hit) return {rec.consensus_correct, rec.sample_cost};
  if (rec.grid.empty()) throw ConfigError("validation record has an empty grid");
  ScoredOutcome out{false, rec.sample_cost};
  switch (d.kind) {
    case DecisionKind::slm_only:
      if (rec.modal_correct) {
        out.correct = *rec.modal_correct;
      } else {
        out.correct = rec.grid_correct.front();
        out.cost += shepherding_cost(rec.q_len, 0, rec.grid_out_len.front(), cm);
      }
      break;
    case DecisionKind::hint: {
      const std::size_t n = std::min(d.hint_tokens, rec.full_len);
      const auto it = std::upper_bound(rec.grid.begin(), rec.grid.end(), n);
      const auto i = static_cast<std::size_t>(std::distance(rec.grid.begin(), it)) - 1;
      const bool full = n >= rec.full_len && rec.full_len > 0;
      out.correct = full ? rec.full_hint_correct : rec.grid_correct[i];
      out.cost += shepherding_cost(rec.q_len, n, rec.grid_out_len[i], cm);
      break;
    }
    case DecisionKind::full_llm:
      out.correct = rec.llm_correct;
      out.cost += llm_cost(rec.q_len, rec.full_len, cm);
      break;
  }
  return out;
}

CalibrationGrid CalibrationGrid::standard(std::size_t n_max) {
  CalibrationGrid g;
  for (int a = 0; a <= 100; ++a) g.alphas.push_back(a / 100.0);
  for (std::size_t e = 10; e <= n_max; e += 10) g.etas.push_back(e);
  return g;
}

std::vector<GridPoint> sweep(std::span<const ValidationRecord> records, const CalibrationGrid& grid,
                             const CostModel& cm, const policy::PolicyConfig& base) {
  struct Pre {
    double p;
    std::size_t n;
    ScoredOutcome slm, hint, full;
    bool fixed;
  };
  std::vector<Pre> pre;
  pre.reserve(records.size());
  for (const auto& r : records) {
    Pre x;
    x.p = r.prediction.hint_prob;
    x.n = policy::hint_budget(r.prediction.size_log, base.n_max);
    x.fixed = r.consensus_hit;
    x.slm = score(r, Decision::slm_only(""), cm);
    x.hint = x.n > 0 ? score(r, Decision::hint(x.n, ""), cm) : x.slm;
    x.full = score(r, Decision::full_llm(""), cm);
    pre.push_back(x);
  }

  std::vector<GridPoint> points;
  points.reserve(grid.alphas.size() * grid.etas.size());
  for (double alpha : grid.alphas) {
    for (std::size_t eta : grid.etas) {
      GridPoint gp{alpha, eta, 0, records.size(), {}};
      for (const auto& x : pre) {
        const ScoredOutcome* o;
        if (x.fixed || x.p < alpha || x.n == 0) {
          o = &x.slm;
        } else if (x.n <= eta) {
          o = &x.hint;
        } else {
          o = &x.full;
        }
        gp.correct += o->correct ? 1 : 0;
        gp.total_cost += o->cost;
      }
      points.push_back(gp);
    }
  }
  return points;
}

namespace {

bool cheaper_then_lower(const GridPoint& a, const GridPoint& b) {
  if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
  if (a.alpha != b.alpha) return a.alpha < b.alpha;
  return a.eta < b.eta;
}

}  // namespace

std::vector<GridPoint> pareto_frontier(std::span<const GridPoint> points) {
  std::vector<GridPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const GridPoint& a, const GridPoint& b) {
    if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
    if (a.correct != b.correct) return a.correct > b.correct;
    return cheaper_then_lower(a, b);
  });
  std::vector<GridPoint> front;
  for (const auto& p : sorted) {
    if (front.empty() || p.correct > front.back().correct) front.push_back(p);
  }
  return front;
}

CalibrationResult select(std::span<const GridPoint> points, const CalibrationConstraint& c) {
  if (points.empty()) throw ConfigError("calibration grid is empty");
  CalibrationResult res;
  res.frontier = pareto_frontier(points);
  const GridPoint* best = nullptr;
  for (const auto& p : points) {
    if (c.mode == CalibrationMode::budget) {
      if (!(p.mean_cost() <= c.max_mean_cost)) continue;
      if (!best || p.correct > best->correct || (p.correct == best->correct && cheaper_then_lower(p, *best))) {
        best = &p;
      }
    } else {
      if (!(p.accuracy() >= c.min_accuracy - 1e-12)) continue;
      if (!best || cheaper_then_lower(p, *best)) best = &p;
    }
  }
  if (best) {
    res.feasible = true;
    res.best = *best;
    return res;
  }
  // Infeasible: report the point closest to the constraint.
  res.best = c.mode == CalibrationMode::budget ? res.frontier.front() : res.frontier.back();
  return res;
}

CalibrationResult calibrate(std::span<const ValidationRecord> records, const CostModel& cm,
                            const policy::PolicyConfig& base, const CalibrationConstraint& constraint,
                            const CalibrationGrid& grid) {
  const auto points = sweep(records, grid, cm, base);
  return select(points, constraint);
}

nlohmann::json to_json(const GridPoint& p) {
  return {{"alpha", p.alpha},
          {"eta_hint", p.eta},
          {"accuracy", p.accuracy()},
          {"mean_cost", p.mean_cost()},
          {"total_cost", p.total_cost.to_string()}};
}

nlohmann::json to_json(const CalibrationResult& r) {
  auto frontier = nlohmann::json::array();
  for (const auto& p : r.frontier) frontier.push_back(to_json(p));
  return {{"feasible", r.feasible}, {"best", to_json(r.best)}, {"frontier", std::move(frontier)}};
}

}  // namespace shepherd::metrics
