#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/predictor/features.hpp"

namespace shepherd::gateway {

struct GatewayConfig {
  backends::BackendSpec slm;
  backends::BackendSpec llm;
  predictor::FeatureMode mode = predictor::FeatureMode::proactive;
  policy::PolicyConfig policy;
  std::string model_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 8;

  /// Throws ConfigError on missing or inconsistent fields.
  void validate() const;
};

/// Replace every ${NAME} with the environment variable NAME. Throws
/// ConfigError when a variable is unset or a reference is unterminated.
std::string interpolate_env(std::string_view text);

/// String values anywhere in `j` are interpolated.
nlohmann::json interpolate_env_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const GatewayConfig& c);
void from_json(const nlohmann::json& j, GatewayConfig& c);

/// Reads, interpolates, parses and validates a JSON config file.
GatewayConfig load_gateway_config(const std::string& path);

}  // namespace shepherd::gateway
