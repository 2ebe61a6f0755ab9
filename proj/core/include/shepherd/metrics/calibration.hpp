#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/core/money.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/predictor/predictor.hpp"

namespace shepherd::metrics {

/// Everything needed to re-score one validation query under any (alpha, eta)
/// without calling a backend.
struct ValidationRecord {
  predictor::Prediction prediction;
  std::size_t q_len = 0;
  std::size_t full_len = 0;
  /// Hint-budget grid and SLM correctness / output length at each point.
  std::vector<std::size_t> grid;
  std::vector<bool> grid_correct;
  std::vector<std::size_t> grid_out_len;
  bool llm_correct = false;
  /// SLM correctness with the whole LLM response as hint (Hint(n >= |h_l|)).
  bool full_hint_correct = false;
  /// Reactive mode: the K samples agreed, so the policy never runs.
  bool consensus_hit = false;
  bool consensus_correct = false;
  /// Reactive mode: correctness of the modal sample reused on SlmOnly.
  std::optional<bool> modal_correct;
  /// SLM cost of the K reactive samples (zero for a free SLM).
  Money sample_cost;
};

/// Record from a labeled example. Hint(n) correctness is the flag of the
/// largest grid point <= n.
ValidationRecord make_record(const labeling::LabeledExample& ex, const predictor::Prediction& pred);

/// Scores `ex` with `model`. In reactive mode the stored SLM samples feed the
/// predictor and decide consensus / the modal answer, and their cost is
/// charged to every decision.
ValidationRecord make_record(const labeling::LabeledExample& ex, const predictor::Predictor& model,
                             const policy::PolicyConfig& pc, const CostModel& cm, const QualityJudge& judge);

struct ScoredOutcome {
  bool correct = false;
  Money cost;
};

ScoredOutcome score(const ValidationRecord& rec, const policy::Decision& d, const CostModel& cm);

struct GridPoint {
  double alpha = 0.0;
  std::size_t eta = 0;
  std::size_t correct = 0;
  std::size_t count = 0;
  Money total_cost;

  double accuracy() const { return count == 0 ? 0.0 : double(correct) / double(count); }
  double mean_cost() const { return count == 0 ? 0.0 : total_cost.dollars() / double(count); }
};

struct CalibrationGrid {
  std::vector<double> alphas;
  std::vector<std::size_t> etas;

  /// alpha in {0.00, 0.01, ..., 1.00}, eta in {10, 20, ..., n_max}.
  static CalibrationGrid standard(std::size_t n_max);
};

/// Score every (alpha, eta) pair; alpha-major order.
std::vector<GridPoint> sweep(std::span<const ValidationRecord> records, const CalibrationGrid& grid,
                             const CostModel& cm, const policy::PolicyConfig& base);

enum class CalibrationMode { budget, accuracy_floor };

struct CalibrationConstraint {
  CalibrationMode mode = CalibrationMode::budget;
  /// Mode budget: maximum mean cost per query in dollars (may be infinite).
  double max_mean_cost = 0.0;
  /// Mode accuracy_floor: minimum accuracy as a fraction.
  double min_accuracy = 0.0;
};

struct CalibrationResult {
  bool feasible = false;
  GridPoint best;
  /// Cost-ascending points where accuracy strictly improves.
  std::vector<GridPoint> frontier;
};

/// Budget mode maximizes accuracy subject to mean cost <= budget; accuracy
/// floor mode minimizes cost subject to accuracy >= floor. Ties go to lower
/// cost, then lower alpha, then lower eta.
CalibrationResult select(std::span<const GridPoint> points, const CalibrationConstraint& constraint);

CalibrationResult calibrate(std::span<const ValidationRecord> records, const CostModel& cm,
                            const policy::PolicyConfig& base, const CalibrationConstraint& constraint,
                            const CalibrationGrid& grid);

std::vector<GridPoint> pareto_frontier(std::span<const GridPoint> points);

nlohmann::json to_json(const GridPoint& p);
nlohmann::json to_json(const CalibrationResult& r);

}  // namespace shepherd::metrics
