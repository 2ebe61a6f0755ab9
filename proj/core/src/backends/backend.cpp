#include "shepherd/backends/backend.hpp"

#include "shepherd/backends/mock_backend.hpp"
#include "shepherd/backends/openai_backend.hpp"
#include "shepherd/core/errors.hpp"

namespace shepherd::backends {

std::string_view to_string(Role role) { return role == Role::slm ? "slm" : "llm"; }

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::mock ? "mock" : "http_openai_compatible";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::budget_exhausted:
      return "budget_exhausted";
    case FinishReason::natural_stop:
      return "natural_stop";
    case FinishReason::error:
      return "error";
  }
  return "error";
}

void BackendSpec::validate() const {
  if (model_name.empty()) throw ConfigError("backend spec needs a model_name");
  if (kind == BackendKind::http_openai_compatible && (!endpoint_url || endpoint_url->empty())) {
    throw ConfigError("http backend '" + model_name + "' needs an endpoint_url");
  }
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (price_in < Money{} || price_out < Money{}) throw ConfigError("prices must be non-negative");
  if (!TokenizerRegistry::global().contains(tokenizer)) throw ConfigError("unknown tokenizer: " + tokenizer);
}

void to_json(nlohmann::json& j, const BackendSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"model_name", spec.model_name},
                     {"role", to_string(spec.role)},
                     {"price_in_per_million", spec.price_in.dollars() * 1e6},
                     {"price_out_per_million", spec.price_out.dollars() * 1e6},
                     {"max_output_tokens", spec.max_output_tokens},
                     {"tokenizer", spec.tokenizer},
                     {"request_logprobs", spec.request_logprobs},
                     {"max_attempts", spec.max_attempts},
                     {"initial_backoff_ms", spec.initial_backoff.count()},
                     {"timeout_ms", spec.timeout.count()},
                     {"max_in_flight", spec.max_in_flight}};
  if (spec.endpoint_url) j["endpoint_url"] = *spec.endpoint_url;
  if (!spec.api_key_env.empty()) j["api_key_env"] = spec.api_key_env;
  if (spec.mock_script) j["mock_script"] = *spec.mock_script;
}

void from_json(const nlohmann::json& j, BackendSpec& spec) {
  const auto kind = j.value("kind", std::string("mock"));
  if (kind == "mock") {
    spec.kind = BackendKind::mock;
  } else if (kind == "http_openai_compatible" || kind == "http") {
    spec.kind = BackendKind::http_openai_compatible;
  } else {
    throw ConfigError("unknown backend kind: " + kind);
  }
  const auto role = j.value("role", std::string("slm"));
  if (role != "slm" && role != "llm") throw ConfigError("unknown backend role: " + role);
  spec.role = role == "slm" ? Role::slm : Role::llm;
  spec.model_name = j.at("model_name").get<std::string>();
  if (j.contains("endpoint_url")) spec.endpoint_url = j.at("endpoint_url").get<std::string>();
  spec.price_in = Money::per_million_tokens(j.value("price_in_per_million", 0.0));
  spec.price_out = Money::per_million_tokens(j.value("price_out_per_million", 0.0));
  spec.max_output_tokens = j.value("max_output_tokens", kDefaultMaxOutputTokens);
  spec.tokenizer = j.value("tokenizer", std::string(kBuiltinTokenizer));
  spec.request_logprobs = j.value("request_logprobs", false);
  spec.api_key_env = j.value("api_key_env", std::string());
  spec.max_attempts = j.value("max_attempts", 3);
  spec.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 250));
  spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60'000));
  spec.max_in_flight = j.value("max_in_flight", std::size_t{8});
  if (j.contains("mock_script")) spec.mock_script = j.at("mock_script").get<std::string>();
  spec.validate();
}

CostModel cost_model(const BackendSpec& slm, const BackendSpec& llm) {
  return CostModel{llm.price_in, llm.price_out, slm.price_in, slm.price_out};
}

Backend::Backend(BackendSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

GenerationResult Backend::generate(const TokenSequence& prompt, const DecodingParams& params) {
  params.validate(spec_.max_output_tokens);
  if (params.max_new_tokens == 0) {
    // hint(q, 0) is empty: no upstream call, nothing billed.
    GenerationResult empty;
    empty.finish_reason = FinishReason::budget_exhausted;
    return empty;
  }
  return do_generate(prompt, params);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  spec.validate();
  if (spec.kind == BackendKind::mock) {
    if (!spec.mock_script) throw ConfigError("mock backend '" + spec.model_name + "' needs mock_script");
    return std::make_unique<MockBackend>(spec, std::make_shared<const MockScript>(MockScript::load(*spec.mock_script)));
  }
  return std::make_unique<OpenAICompatibleBackend>(spec);
}

}  // namespace shepherd::backends
