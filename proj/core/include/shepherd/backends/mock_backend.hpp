#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"

namespace shepherd::backends {

/// Response override for prompts that carry a hint of a given token length.
struct HintRule {
  std::size_t min_hint_tokens = 0;
  /// Inclusive upper bound; unbounded when absent.
  std::optional<std::size_t> max_hint_tokens;
  std::string response;
};

/// Scripted behaviour for one question.
struct MockEntry {
  std::string question;
  /// Canonical full response h(q) for the unhinted prompt.
  std::string response;
  /// Evaluated in order; the last rule whose range contains the hint length
  /// wins. Without a match the canonical response is used.
  std::vector<HintRule> hinted;
  /// Alternates for sampled decoding: seed s selects samples[(s - 1) % size].
  std::vector<std::string> samples;
  /// Optional per-token entropy trace, reported as logprob = -entropy
  /// (cycled when shorter than the output).
  std::vector<double> entropy;
  /// Simulate an upstream outage for this question.
  bool fail = false;
};

void to_json(nlohmann::json& j, const MockEntry& e);
void from_json(const nlohmann::json& j, MockEntry& e);

class MockScript {
 public:
  void add(MockEntry entry);
  const MockEntry* find(std::string_view question) const;
  std::size_t size() const { return entries_.size(); }

  nlohmann::json to_json() const;
  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::map<std::string, MockEntry, std::less<>> entries_;
};

/// Deterministic test double for h_s / h_l.
///
/// Prompts are parsed with policy::parse_prompt; the question selects the
/// script entry and the hint's token count selects a HintRule. Sampled
/// decoding (temperature > 0 with a seed) picks a scripted alternate. A budget
/// of n always returns exactly the first min(n, |response|) tokens.
class MockBackend final : public Backend {
 public:
  MockBackend(BackendSpec spec, std::shared_ptr<const MockScript> script);

  bool exact_prefix() const override { return true; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  GenerationResult do_generate(const TokenSequence& prompt, const DecodingParams& params) override;

 private:
  std::shared_ptr<const MockScript> script_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace shepherd::backends
