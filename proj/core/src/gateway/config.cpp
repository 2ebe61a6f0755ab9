#include "shepherd/gateway/config.hpp"

#include <cstdlib>
#include <fstream>

#include "shepherd/core/errors.hpp"

namespace shepherd::gateway {

void GatewayConfig::validate() const {
  slm.validate();
  llm.validate();
  if (slm.role != backends::Role::slm) throw ConfigError("slm backend must have role slm");
  if (llm.role != backends::Role::llm) throw ConfigError("llm backend must have role llm");
  policy.validate();
  if (policy.n_max > llm.max_output_tokens) throw ConfigError("policy n_max exceeds the LLM's max_output_tokens");
  if (model_path.empty()) throw ConfigError("gateway needs a model_path");
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (threads == 0) throw ConfigError("threads must be positive");
}

std::string interpolate_env(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const auto close = text.find('}', i + 2);
      if (close == std::string_view::npos) throw ConfigError("unterminated ${...} in config");
      const std::string name(text.substr(i + 2, close - i - 2));
      if (name.empty()) throw ConfigError("empty ${} in config");
      const char* value = std::getenv(name.c_str());
      if (!value) throw ConfigError("environment variable " + name + " is not set");
      out += value;
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

nlohmann::json interpolate_env_json(const nlohmann::json& j) {
  if (j.is_string()) return interpolate_env(std::string_view(j.get_ref<const std::string&>()));
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) out[k] = interpolate_env_json(v);
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : j) out.push_back(interpolate_env_json(v));
    return out;
  }
  return j;
}

void to_json(nlohmann::json& j, const GatewayConfig& c) {
  j = {{"slm", c.slm},
       {"llm", c.llm},
       {"mode", std::string(predictor::to_string(c.mode))},
       {"policy", c.policy},
       {"model_path", c.model_path},
       {"host", c.host},
       {"port", c.port},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, GatewayConfig& c) {
  auto slm = j.at("slm");
  auto llm = j.at("llm");
  slm["role"] = "slm";
  llm["role"] = "llm";
  c.slm = slm.get<backends::BackendSpec>();
  c.llm = llm.get<backends::BackendSpec>();
  c.mode = predictor::parse_feature_mode(j.value("mode", std::string("proactive")));
  c.policy = j.contains("policy") ? j.at("policy").get<policy::PolicyConfig>() : policy::PolicyConfig{};
  c.model_path = j.at("model_path").get<std::string>();
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.threads = j.value("threads", c.threads);
}

GatewayConfig load_gateway_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gateway config: " + path);
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("gateway config is not valid JSON: " + std::string(e.what()));
  }
  GatewayConfig c;
  try {
    c = interpolate_env_json(raw).get<GatewayConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("gateway config: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

}  // namespace shepherd::gateway
