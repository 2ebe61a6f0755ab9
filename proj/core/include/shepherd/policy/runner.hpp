#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"
#include "shepherd/backends/ledger.hpp"
#include "shepherd/core/errors.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/predictor/predictor.hpp"

namespace shepherd::policy {

struct Outcome {
  std::string query_id;
  std::string final_text;
  std::string extracted_answer;
  /// Judged against the ground truth when the query has one.
  std::optional<bool> correct;
  Decision decision;
  /// Hint tokens actually returned by the LLM.
  std::size_t hint_tokens_used = 0;
  backends::UsageLedger usage;
  Money dollars;
  /// Answers of the K reactive samples (empty in proactive mode).
  std::vector<std::string> sample_answers;
  bool consensus_hit = false;
  /// Policy compute only (features, prediction, mapping); excludes upstream calls.
  std::chrono::nanoseconds decision_latency{0};
};

nlohmann::json to_json(const Outcome& o);

/// An upstream call failed mid-pipeline. Carries the decision trace and the
/// usage that was already billed.
class ExecutionError : public TransportError {
 public:
  ExecutionError(const TransportError& cause, Outcome partial)
      : TransportError(cause.what(), cause.attempts(), cause.retryable()), partial_(std::move(partial)) {}
  const Outcome& partial() const { return partial_; }

 private:
  Outcome partial_;
};

/// Executes shepherding decisions against an SLM and an LLM backend.
/// Hints are generated greedily; final answers use the configured completion
/// decoding. Thread-safe if the backends are.
class ShepherdRunner {
 public:
  ShepherdRunner(backends::Backend& slm, backends::Backend& llm, const QualityJudge* judge, PolicyConfig cfg);

  const PolicyConfig& config() const { return cfg_; }

  /// Carry out a fixed decision. SlmOnly runs the SLM on q; Hint(n) fetches
  /// an n-token LLM prefix and runs the SLM on q plus the hint; FullLlm
  /// returns the LLM response without touching the SLM.
  Outcome execute(const Query& q, const Decision& decision) const;

  Outcome run_proactive(const Query& q, const predictor::Predictor& model) const;

  /// K seeded SLM samples first; a k-quorum answers directly with no LLM
  /// usage. Otherwise the predictor sees the samples, and an SlmOnly verdict
  /// reuses the modal sample instead of sampling again.
  Outcome run_reactive(const Query& q, const predictor::Predictor& model) const;

 private:
  void run_decision(const Query& q, Outcome& out) const;
  void finish(const Query& q, Outcome& out) const;
  DecodingParams completion_params(const backends::Backend& b) const;

  backends::Backend& slm_;
  backends::Backend& llm_;
  const QualityJudge* judge_;
  PolicyConfig cfg_;
};

}  // namespace shepherd::policy
