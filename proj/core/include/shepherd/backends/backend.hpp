#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/core/money.hpp"
#include "shepherd/core/tokens.hpp"
#include "shepherd/core/types.hpp"

namespace shepherd::backends {

enum class Role { slm, llm };
enum class BackendKind { mock, http_openai_compatible };
enum class FinishReason { budget_exhausted, natural_stop, error };

std::string_view to_string(Role role);
std::string_view to_string(BackendKind kind);
std::string_view to_string(FinishReason reason);

struct TokenUsage {
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;

  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct GenerationResult {
  std::string text;
  TokenSequence tokens;
  /// One log-probability per output token when the backend reports them.
  std::optional<std::vector<double>> token_logprobs;
  FinishReason finish_reason = FinishReason::natural_stop;
  TokenUsage usage;

  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

struct BackendSpec {
  BackendKind kind = BackendKind::mock;
  std::optional<std::string> endpoint_url;
  std::string model_name;
  Role role = Role::slm;
  /// Per-token prices for this role.
  Money price_in;
  Money price_out;
  /// N_max: hard ceiling on max_new_tokens for any call.
  std::size_t max_output_tokens = kDefaultMaxOutputTokens;
  std::string tokenizer{kBuiltinTokenizer};
  /// Ask the upstream for per-token logprobs (entropy feature).
  bool request_logprobs = false;
  /// Name of the environment variable holding the API key. The key itself is
  /// never stored or logged.
  std::string api_key_env;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_in_flight = 8;
  /// Mock only: path of a MockScript JSON file.
  std::optional<std::string> mock_script;

  /// Throws ConfigError on inconsistent fields.
  void validate() const;
};

void to_json(nlohmann::json& j, const BackendSpec& spec);
/// Prices are read as "$ per 1M tokens" from `price_in_per_million` /
/// `price_out_per_million`.
void from_json(const nlohmann::json& j, BackendSpec& spec);

/// Combine an SLM and an LLM spec into one cost model.
CostModel cost_model(const BackendSpec& slm, const BackendSpec& llm);

class Backend {
 public:
  explicit Backend(BackendSpec spec);
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendSpec& spec() const { return spec_; }

  /// Generate at most params.max_new_tokens tokens. Validates params against
  /// N_max before any upstream work. A budget of 0 returns an empty result
  /// with finish_reason budget_exhausted.
  GenerationResult generate(const TokenSequence& prompt, const DecodingParams& params);

  /// True when a budget-n call is guaranteed to equal the first n tokens of
  /// the unbudgeted call (greedy decoding), so callers may slice locally.
  virtual bool exact_prefix() const { return false; }

 protected:
  virtual GenerationResult do_generate(const TokenSequence& prompt, const DecodingParams& params) = 0;

 private:
  BackendSpec spec_;
};

/// Mock backends load their script from spec.mock_script; HTTP backends
/// connect lazily.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

}  // namespace shepherd::backends
