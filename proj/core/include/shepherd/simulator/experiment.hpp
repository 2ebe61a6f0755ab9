#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/labeling/labeling.hpp"
#include "shepherd/labeling/profile.hpp"
#include "shepherd/metrics/calibration.hpp"
#include "shepherd/metrics/cost.hpp"
#include "shepherd/metrics/report.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/policy/runner.hpp"
#include "shepherd/predictor/train.hpp"
#include "shepherd/simulator/trace.hpp"

namespace shepherd::simulator {

/// oracle, proactive, reactive, llm_only, slm_only, or fixed_fraction:<P>
/// with P in [0, 1].
struct StrategySpec {
  std::string name;
  std::optional<double> fraction;
};

/// Throws ConfigError for unknown names.
StrategySpec parse_strategy(const std::string& text);

struct ExperimentConfig {
  labeling::TraceProfile profile = labeling::gsm8k_profile();
  std::size_t queries = 2000;
  std::uint64_t seed = 0;
  TraceOptions trace;
  CostModel cost = hosted_llama70b_pricing();
  policy::PolicyConfig policy;
  predictor::TrainConfig train;
  std::vector<std::string> strategies{"oracle", "proactive", "reactive", "llm_only", "slm_only"};
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  /// Calibration constraint for the learned policies. Unset: accuracy floor
  /// at floor_ratio times the validation LLM accuracy.
  std::optional<metrics::CalibrationConstraint> constraint;
  double floor_ratio = 0.95;
  /// Runs per query for the majority-vote wrapper (1 disables it).
  std::size_t trials = 1;
  int outlier_threshold = labeling::kDefaultOutlierThreshold;
  std::size_t worker_threads = 1;
};

struct StrategyRun {
  StrategySpec spec;
  std::vector<policy::Outcome> outcomes;
  metrics::OutcomeSummary summary;
  std::optional<metrics::CalibrationResult> calibration;
  std::map<std::string, std::size_t> decisions;
};

struct ExperimentReport {
  labeling::DatasetStats scripted;
  labeling::DatasetStats labeled;
  std::size_t skipped = 0;
  std::size_t dropped = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  metrics::DominanceReport dominance;
  metrics::Baselines baselines;
  std::vector<StrategyRun> runs;
  std::vector<metrics::ReportRow> rows;
};

/// Synthesize a trace, label it against scripted mocks, split 60/20/20,
/// train and calibrate the learned policies, and evaluate every strategy on
/// the test split. Accuracies are in percent, costs in dollars per query.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentReport& r);

}  // namespace shepherd::simulator
