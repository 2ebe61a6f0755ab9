#include "shepherd/backends/openai_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "shepherd/core/errors.hpp"

namespace shepherd::backends {

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

CompletionTransport http_transport(const BackendSpec& spec) {
  const std::string base = *spec.endpoint_url;
  const std::string key_env = spec.api_key_env;
  const auto timeout = spec.timeout;
  return [base, key_env, timeout](const std::string& body) {
    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    httplib::Headers headers;
    if (!key_env.empty()) {
      if (const char* key = std::getenv(key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    HttpReply reply;
    auto res = client.Post(kCompletionsPath, headers, body, "application/json");
    if (!res) {
      reply.transport_error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  };
}

}  // namespace

nlohmann::json build_completion_request(const BackendSpec& spec, const TokenSequence& prompt,
                                        const DecodingParams& params) {
  if (spec.kind != BackendKind::http_openai_compatible) {
    throw ConfigError("completion requests are only built for http backends");
  }
  if (!spec.endpoint_url || spec.endpoint_url->empty()) {
    throw ConfigError("backend '" + spec.model_name + "' has no endpoint_url");
  }
  params.validate(spec.max_output_tokens);
  nlohmann::json req{
      {"model", spec.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text()}}})},
      {"temperature", params.temperature},
      {"top_p", params.top_p},
      {"max_tokens", params.max_new_tokens},
      {"max_new_tokens", params.max_new_tokens},
      {"stream", false},
  };
  if (params.seed) req["seed"] = *params.seed;
  if (spec.request_logprobs) req["logprobs"] = true;
  return req;
}

GenerationResult parse_completion_response(const nlohmann::json& body, const BackendSpec& spec,
                                           const TokenSequence& prompt) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw TransportError("completion response has no choices", 1, false);
  }
  const auto& choice = body["choices"][0];
  GenerationResult result;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    result.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    result.text = choice["text"].get<std::string>();
  }
  result.tokens = tokenize(result.text, spec.tokenizer);

  const std::string finish = choice.value("finish_reason", std::string("stop"));
  result.finish_reason = finish == "length" ? FinishReason::budget_exhausted : FinishReason::natural_stop;

  if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
      choice["logprobs"]["content"].is_array()) {
    std::vector<double> lp;
    for (const auto& t : choice["logprobs"]["content"]) lp.push_back(t.value("logprob", 0.0));
    result.token_logprobs = std::move(lp);
  }

  result.usage.input_tokens = prompt.size();
  result.usage.output_tokens = result.tokens.size();
  if (body.contains("usage") && body["usage"].is_object()) {
    const auto& u = body["usage"];
    if (u.contains("prompt_tokens")) result.usage.input_tokens = u["prompt_tokens"].get<std::size_t>();
    if (u.contains("completion_tokens")) result.usage.output_tokens = u["completion_tokens"].get<std::size_t>();
  }
  return result;
}

OpenAICompatibleBackend::OpenAICompatibleBackend(BackendSpec spec)
    : OpenAICompatibleBackend(spec, CompletionTransport{}) {}

OpenAICompatibleBackend::OpenAICompatibleBackend(BackendSpec spec, CompletionTransport transport)
    : Backend(std::move(spec)),
      transport_(transport ? std::move(transport) : http_transport(this->spec())),
      in_flight_(std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(this->spec().max_in_flight))) {
  if (this->spec().kind != BackendKind::http_openai_compatible) {
    throw ConfigError("OpenAICompatibleBackend needs an http_openai_compatible spec");
  }
}

GenerationResult OpenAICompatibleBackend::do_generate(const TokenSequence& prompt, const DecodingParams& params) {
  const std::string body = build_completion_request(spec(), prompt, params).dump();
  auto backoff = spec().initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= spec().max_attempts; ++attempt) {
    HttpReply reply;
    {
      in_flight_->acquire();
      try {
        reply = transport_(body);
      } catch (...) {
        in_flight_->release();
        throw;
      }
      in_flight_->release();
    }
    bool retryable = true;
    if (!reply.transport_error.empty()) {
      last_error = "connection failed: " + reply.transport_error;
    } else if (reply.status >= 200 && reply.status < 300) {
      nlohmann::json parsed = nlohmann::json::parse(reply.body, nullptr, false);
      if (parsed.is_discarded()) {
        throw TransportError("upstream returned invalid JSON", attempt, false);
      }
      return parse_completion_response(parsed, spec(), prompt);
    } else {
      last_error = "upstream status " + std::to_string(reply.status);
      retryable = reply.status == 429 || reply.status >= 500;
    }
    if (!retryable) {
      throw TransportError(last_error, attempt, false);
    }
    if (attempt < spec().max_attempts) {
      spdlog::warn("backend {} attempt {}/{} failed ({}); retrying", spec().model_name, attempt,
                   spec().max_attempts, last_error);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(last_error, spec().max_attempts, true);
}

}  // namespace shepherd::backends
