#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/core/money.hpp"
#include "shepherd/policy/runner.hpp"

namespace shepherd::metrics {

struct PolicySummary {
  double accuracy = 0.0;
  double cost = 0.0;
  double slm_accuracy = 0.0;
  double llm_accuracy = 0.0;
  double llm_cost = 0.0;
};

/// ((A - A_s) / (A_l - A_s)) / (C / C_l). Accuracies may be fractions or
/// percentages as long as they agree. Throws ConfigError when A_l == A_s,
/// C <= 0 or C_l <= 0.
double ace(const PolicySummary& s);

/// 100 (1 - C / C_l). Throws ConfigError when C_l <= 0.
double cost_reduction(double cost, double llm_cost);

/// Round to `decimals` places, half away from zero.
double round_to(double x, int decimals);

struct StrategyResult {
  std::string name;
  double cost = 0.0;
  double accuracy = 0.0;
};

struct Baselines {
  double slm_accuracy = 0.0;
  double llm_accuracy = 0.0;
  double llm_cost = 0.0;
};

struct ReportRow {
  std::string strategy;
  double cost = 0.0;
  double accuracy = 0.0;
  double cost_reduction_pct = 0.0;
  /// Same, from costs rounded to three decimals.
  double cost_reduction_rounded_pct = 0.0;
  /// Absent when undefined (zero-cost rows).
  std::optional<double> ace;
};

/// One row per strategy in input order.
std::vector<ReportRow> evaluate(std::span<const StrategyResult> strategies, const Baselines& baselines);

/// Per-query aggregate of a strategy's outcomes.
struct OutcomeSummary {
  std::size_t count = 0;
  std::size_t correct = 0;
  Money total;

  double accuracy() const { return count == 0 ? 0.0 : double(correct) / double(count); }
};

OutcomeSummary summarize(std::span<const policy::Outcome> outcomes);

/// Majority vote over repeated trials of one query: the modal extracted
/// answer (first occurrence on ties) supplies text, correctness and usage;
/// dollars are the trial average rounded down to the picodollar.
policy::Outcome majority_vote(std::span<const policy::Outcome> trials);

std::string to_csv(std::span<const ReportRow> rows);
std::string to_text_table(std::span<const ReportRow> rows, const std::string& title = {});
nlohmann::json to_json(const ReportRow& row);

inline constexpr const char* kEvalSchema = "shepherd-eval/1";

/// Appends outcome lines tagged with the strategy name.
void write_outcomes(std::ostream& out, const std::string& strategy, std::span<const policy::Outcome> outcomes);

/// A printed results table: the LLM and SLM baseline rows plus strategies
/// with their printed reduction and ACE values.
struct PaperTable {
  std::string name;
  Baselines baselines;
  double slm_cost = 0.0;
  struct Row {
    std::string strategy;
    double cost = 0.0;
    double accuracy = 0.0;
    double printed_cost_reduction = 0.0;
    double printed_ace = 0.0;
  };
  std::vector<Row> rows;
};

/// CSV columns: strategy,cost,accuracy,cost_reduction,ace with rows named
/// "LLM" and "SLM" carrying the baselines. Throws SchemaError on malformed
/// input.
PaperTable read_paper_table(const std::string& path);

}  // namespace shepherd::metrics
