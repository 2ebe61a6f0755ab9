#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"
#include "shepherd/backends/ledger.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/core/types.hpp"

namespace shepherd::labeling {

/// floor(p / 100 * full_len) for p = 0, step, ..., 90, deduplicated and
/// ascending. step_pct must be one of 5, 10, 20, 25.
std::vector<std::size_t> grid_sizes(std::size_t full_len, int step_pct);

/// One temperature-sampled SLM answer kept for the reactive features.
struct SlmSample {
  std::string answer;
  std::size_t output_tokens = 0;
  /// -mean(logprob) when the backend reported logprobs.
  std::optional<double> entropy;

  friend bool operator==(const SlmSample&, const SlmSample&) = default;
};

struct LabeledExample {
  Query query;
  std::size_t full_llm_len = 0;
  std::vector<std::size_t> grid;
  std::vector<bool> per_budget_correct;
  std::size_t n_star = 0;
  bool y = false;
  double r = 0.0;
  bool unsolvable = false;
  int outlier_count = 0;

  /// The unhinted LLM response is judged correct.
  bool llm_correct = false;
  /// The SLM is correct with the whole LLM response as hint.
  bool full_hint_correct = false;
  /// Tokens of the rendered unhinted prompt.
  std::size_t prompt_tokens = 0;
  /// SLM output tokens per grid point.
  std::vector<std::size_t> slm_output_tokens;
  std::vector<SlmSample> slm_samples;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

void to_json(nlohmann::json& j, const LabeledExample& e);
void from_json(const nlohmann::json& j, LabeledExample& e);

struct LabelConfig {
  int step_pct = 10;
  /// Reactive samples to store per query (0 disables).
  std::size_t reactive_samples = 0;
  double sample_temperature = 0.3;
  double sample_top_p = 0.95;
  std::size_t worker_threads = 1;
};

/// Label one query: n* is the first grid budget whose hint makes the SLM
/// satisfactory, or |h_l| (unsolvable) when none does. All calls decode
/// greedily. Throws TransportError when a backend fails after retries.
LabeledExample label_query(const Query& q, backends::Backend& slm, backends::Backend& llm, const QualityJudge& judge,
                           const LabelConfig& cfg, backends::UsageLedger* ledger = nullptr);

/// Minority-class count over exactly 11 correctness flags (ten 10% levels and
/// the full response). Throws ConfigError on any other arity.
int outlier_count(std::span<const bool> flags);

struct Skipped {
  std::string id;
  std::string reason;
};

struct LabelingRun {
  std::vector<LabeledExample> examples;
  std::vector<Skipped> skipped;
  backends::UsageLedger usage;
};

/// Label queries in parallel; the output keeps the input order.
LabelingRun label_dataset(const std::vector<Query>& queries, backends::Backend& slm, backends::Backend& llm,
                          const QualityJudge& judge, const LabelConfig& cfg);

struct FilterResult {
  std::vector<LabeledExample> kept;
  std::vector<Skipped> dropped;
};

inline constexpr int kDefaultOutlierThreshold = 5;

/// Drops unsolvable examples whose full LLM answer is wrong
/// ("llm_incorrect_no_hint_helps") and examples with outlier_count >=
/// threshold ("outliers_ge_<threshold>"). threshold <= 0 disables rule (b).
FilterResult filter_dataset(std::vector<LabeledExample> examples, int outlier_threshold = kDefaultOutlierThreshold);

struct DatasetStats {
  std::size_t count = 0;
  double p_zero = 0.0;
  /// Share of examples in the 10%, 20%, ..., 90% buckets of |h_l|.
  std::array<double, 9> bucket_masses{};
  double p_unsolvable = 0.0;
  /// Population standard deviation of n* over solvable examples with n* > 0.
  double positive_size_std = 0.0;
};

/// Bucket index 0..8 (10%..90%) of a solvable positive n*: the first level p
/// with floor(p / 100 * full_len) >= n_star.
std::size_t size_bucket(std::size_t n_star, std::size_t full_len);

/// Throws ConfigError on an empty set.
DatasetStats dataset_stats(std::span<const LabeledExample> examples);

nlohmann::json to_json(const DatasetStats& s);

inline constexpr const char* kLabelSchema = "shepherd-label/1";

/// JSON-lines with one example per line, each tagged with the schema.
void write_labels(const std::string& path, std::span<const LabeledExample> examples);
/// Throws SchemaError when a line carries another schema.
std::vector<LabeledExample> read_labels(const std::string& path);

}  // namespace shepherd::labeling
