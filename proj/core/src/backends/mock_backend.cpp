#include "shepherd/backends/mock_backend.hpp"

#include <fstream>

#include "shepherd/core/errors.hpp"
#include "shepherd/policy/prompt.hpp"

namespace shepherd::backends {

void to_json(nlohmann::json& j, const MockEntry& e) {
  j = nlohmann::json{{"question", e.question}, {"response", e.response}};
  if (!e.hinted.empty()) {
    auto rules = nlohmann::json::array();
    for (const auto& r : e.hinted) {
      nlohmann::json rule{{"min_hint_tokens", r.min_hint_tokens}, {"response", r.response}};
      if (r.max_hint_tokens) rule["max_hint_tokens"] = *r.max_hint_tokens;
      rules.push_back(std::move(rule));
    }
    j["hinted"] = std::move(rules);
  }
  if (!e.samples.empty()) j["samples"] = e.samples;
  if (!e.entropy.empty()) j["entropy"] = e.entropy;
  if (e.fail) j["fail"] = true;
}

void from_json(const nlohmann::json& j, MockEntry& e) {
  e.question = j.at("question").get<std::string>();
  e.response = j.at("response").get<std::string>();
  e.hinted.clear();
  if (j.contains("hinted")) {
    for (const auto& r : j.at("hinted")) {
      HintRule rule;
      rule.min_hint_tokens = r.value("min_hint_tokens", std::size_t{0});
      if (r.contains("max_hint_tokens")) rule.max_hint_tokens = r.at("max_hint_tokens").get<std::size_t>();
      rule.response = r.at("response").get<std::string>();
      e.hinted.push_back(std::move(rule));
    }
  }
  e.samples = j.value("samples", std::vector<std::string>{});
  e.entropy = j.value("entropy", std::vector<double>{});
  e.fail = j.value("fail", false);
}

void MockScript::add(MockEntry entry) {
  std::string key = entry.question;
  entries_.insert_or_assign(std::move(key), std::move(entry));
}

const MockEntry* MockScript::find(std::string_view question) const {
  auto it = entries_.find(question);
  return it == entries_.end() ? nullptr : &it->second;
}

nlohmann::json MockScript::to_json() const {
  auto entries = nlohmann::json::array();
  for (const auto& [_, e] : entries_) entries.push_back(e);
  return nlohmann::json{{"schema", "shepherd-mock/1"}, {"entries", std::move(entries)}};
}

MockScript MockScript::from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != "shepherd-mock/1") {
    throw SchemaError("mock script schema must be shepherd-mock/1");
  }
  MockScript script;
  for (const auto& e : j.at("entries")) script.add(e.get<MockEntry>());
  return script;
}

MockScript MockScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script: " + path);
  return from_json(nlohmann::json::parse(in));
}

void MockScript::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mock script: " + path);
  out << to_json().dump() << '\n';
}

MockBackend::MockBackend(BackendSpec spec, std::shared_ptr<const MockScript> script)
    : Backend(std::move(spec)), script_(std::move(script)) {
  if (!script_) throw ConfigError("mock backend needs a script");
}

GenerationResult MockBackend::do_generate(const TokenSequence& prompt, const DecodingParams& params) {
  ++calls_;
  const auto parsed = policy::parse_prompt(prompt.text());
  const MockEntry* entry = script_->find(parsed.question);
  if (entry == nullptr) {
    throw TransportError("mock '" + spec().model_name + "' has no script for the question", 1, false);
  }
  if (entry->fail) {
    throw TransportError("mock '" + spec().model_name + "' scripted failure", 1, true);
  }

  const std::string* text = &entry->response;
  if (parsed.hint) {
    const std::size_t hint_tokens = token_count(*parsed.hint, spec().tokenizer);
    for (const auto& rule : entry->hinted) {
      if (hint_tokens >= rule.min_hint_tokens && (!rule.max_hint_tokens || hint_tokens <= *rule.max_hint_tokens)) {
        text = &rule.response;
      }
    }
  } else if (!params.deterministic() && params.seed && !entry->samples.empty()) {
    text = &entry->samples[(*params.seed - 1) % entry->samples.size()];
  }

  const TokenSequence full = tokenize(*text, spec().tokenizer);
  const std::size_t n = std::min(full.size(), params.max_new_tokens);

  GenerationResult result;
  result.tokens = prefix(full, static_cast<std::ptrdiff_t>(n));
  result.text = result.tokens.text();
  result.finish_reason =
      (full.size() > params.max_new_tokens || params.max_new_tokens == 0) ? FinishReason::budget_exhausted
                                                                          : FinishReason::natural_stop;
  result.usage = TokenUsage{prompt.size(), n};
  if (!entry->entropy.empty()) {
    std::vector<double> lp(n);
    for (std::size_t i = 0; i < n; ++i) lp[i] = -entry->entropy[i % entry->entropy.size()];
    result.token_logprobs = std::move(lp);
  }
  return result;
}

}  // namespace shepherd::backends
