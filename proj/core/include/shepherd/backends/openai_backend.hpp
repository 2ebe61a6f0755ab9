#pragma once

#include <functional>
#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"

namespace shepherd::backends {

/// Chat-completions request body. The output budget is sent both as
/// `max_tokens` and `max_new_tokens` since providers disagree on the name.
/// Throws ConfigError for non-HTTP specs or budgets above N_max.
nlohmann::json build_completion_request(const BackendSpec& spec, const TokenSequence& prompt,
                                        const DecodingParams& params);

/// Parse a chat-completions response. Provider-reported usage is used when
/// present, otherwise tokens are counted with the backend's tokenizer.
GenerationResult parse_completion_response(const nlohmann::json& body, const BackendSpec& spec,
                                           const TokenSequence& prompt);

struct HttpReply {
  int status = 0;
  std::string body;
  /// Set when the connection itself failed.
  std::string transport_error;
};

/// POSTs a JSON body to the completions endpoint. Swappable for tests.
using CompletionTransport = std::function<HttpReply(const std::string& body)>;

/// Client for an OpenAI-compatible /v1/chat/completions endpoint.
///
/// Connection failures, 429 and 5xx replies are retried up to
/// spec.max_attempts times with exponential backoff from
/// spec.initial_backoff; other 4xx replies fail immediately. At most
/// spec.max_in_flight requests run concurrently.
class OpenAICompatibleBackend final : public Backend {
 public:
  explicit OpenAICompatibleBackend(BackendSpec spec);
  OpenAICompatibleBackend(BackendSpec spec, CompletionTransport transport);

 protected:
  GenerationResult do_generate(const TokenSequence& prompt, const DecodingParams& params) override;

 private:
  CompletionTransport transport_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace shepherd::backends
