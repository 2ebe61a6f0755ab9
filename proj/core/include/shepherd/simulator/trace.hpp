#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shepherd/backends/mock_backend.hpp"
#include "shepherd/core/types.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/labeling/profile.hpp"

namespace shepherd::simulator {

/// Inclusive range of hint sizes at which the SLM fails despite n >= n*.
struct FailureWindow {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct SyntheticQuery {
  Query query;
  std::size_t llm_len = 0;
  /// Scripted minimum hint size; equals llm_len when unsolvable.
  std::size_t n_star = 0;
  bool unsolvable = false;
  std::optional<FailureWindow> window;
  bool llm_correct = true;
  std::size_t slm_out_len = 0;
  /// Answers of the K temperature samples.
  std::vector<std::string> sample_answers;
  /// Mean per-token entropy reported for every SLM sample.
  double entropy = 0.0;
};

struct TraceOptions {
  /// Share of hint-needing queries with a failure window above n*.
  double failure_window_prob = 0.05;
  /// Draw n* uniformly inside its bucket instead of on the 10% grid.
  bool off_grid = false;
  std::size_t samples = 3;
  /// Probability that all K samples agree; when they agree on a query that
  /// needs a hint, they agree on a wrong answer.
  double consensus_prob_easy = 0.9;
  double consensus_prob_hard = 0.1;
  double entropy_easy = 0.25;
  double entropy_hard = 0.9;
  double entropy_noise = 0.15;
  /// Median |q| multiplier for queries that need a hint.
  double length_signal = 1.6;
  /// Share of "hard" vocabulary in queries without / with a hint need.
  double hard_vocab_easy = 0.05;
  double hard_vocab_hard = 0.6;
  /// LLM correctness for unsolvable and for other queries.
  double unsolvable_llm_correct = 0.6;
  double llm_correct = 1.0;
  double slm_out_median = 120.0;
  std::size_t worker_threads = 1;
};

/// Deterministic per (profile, N, seed, options); query i depends only on
/// (seed, i). Throws ConfigError for an invalid profile.
std::vector<SyntheticQuery> generate_trace(const labeling::TraceProfile& profile, std::size_t n, std::uint64_t seed,
                                           const TraceOptions& options = {});

/// True iff n >= n* and n lies outside the failure window. Unsolvable
/// queries never succeed.
bool synth_quality(const SyntheticQuery& sq, std::size_t n);

/// Minimum passing point of the 10%-grid by exhaustive scan, with the
/// unsolvable fallback to |h_l|.
std::size_t brute_force_n_star(const SyntheticQuery& sq, int step_pct = 10);

struct MockScripts {
  backends::MockScript slm;
  backends::MockScript llm;
};

/// Scripts realizing each query: the LLM's canonical response has exactly
/// llm_len tokens and ends with the answer; the SLM is correct exactly where
/// synth_quality holds.
MockScripts build_mock_scripts(std::span<const SyntheticQuery> trace);

/// Scripted n* statistics of a trace in labeling's format.
labeling::DatasetStats trace_stats(std::span<const SyntheticQuery> trace);

}  // namespace shepherd::simulator
