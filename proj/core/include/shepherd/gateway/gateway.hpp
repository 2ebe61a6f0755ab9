#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "shepherd/backends/backend.hpp"
#include "shepherd/backends/ledger.hpp"
#include "shepherd/gateway/config.hpp"
#include "shepherd/policy/runner.hpp"
#include "shepherd/predictor/predictor.hpp"

namespace httplib {
class Server;
}

namespace shepherd::gateway {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

/// OpenAI-compatible front end that routes each request through the
/// shepherding policy. Request handling is independent of the socket layer.
class Gateway {
 public:
  Gateway(std::unique_ptr<backends::Backend> slm, std::unique_ptr<backends::Backend> llm,
          std::shared_ptr<const predictor::Predictor> model, policy::PolicyConfig cfg);

  /// Builds backends and loads the model; throws if the model cannot be
  /// loaded or its mode disagrees with the config.
  static std::unique_ptr<Gateway> from_config(const GatewayConfig& cfg);

  /// POST /v1/chat/completions. Malformed bodies get 400 without touching a
  /// backend; an upstream failure gets 502 with the decision trace.
  HttpResponse handle_completion(const std::string& body);

  /// GET /metrics, plain text.
  std::string metrics_text() const;

  backends::UsageLedger ledger() const { return ledger_.snapshot(); }
  std::map<std::string, std::size_t> decision_histogram() const;
  std::size_t requests() const { return requests_.load(); }

  /// Blocks until stop() is called or the socket fails to bind (returns false).
  bool serve(const std::string& host, int port, std::size_t threads);
  void stop();

 private:
  std::unique_ptr<backends::Backend> slm_;
  std::unique_ptr<backends::Backend> llm_;
  std::shared_ptr<const predictor::Predictor> model_;
  policy::ShepherdRunner runner_;

  backends::SharedLedger ledger_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> histogram_;
  std::map<int, std::size_t> errors_;
  std::chrono::nanoseconds latency_total_{0};
  std::size_t latency_count_ = 0;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<httplib::Server*> server_{nullptr};
};

}  // namespace shepherd::gateway
