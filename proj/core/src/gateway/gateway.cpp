#include "shepherd/gateway/gateway.hpp"

#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "shepherd/core/errors.hpp"

namespace shepherd::gateway {

namespace {

HttpResponse error_response(int status, const std::string& type, const std::string& message,
                            nlohmann::json extra = nullptr) {
  nlohmann::json body{{"error", {{"type", type}, {"message", message}}}};
  if (!extra.is_null()) body["error"]["trace"] = std::move(extra);
  return {status, body.dump(), "application/json", {}};
}

struct ParsedRequest {
  std::string text;
  TaskKind kind = TaskKind::math_numeric;
};

// Returns an error message instead of throwing so that nothing upstream runs.
std::optional<std::string> parse_request(const std::string& body, ParsedRequest& out) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return "body is not valid JSON";
  if (!j.is_object()) return "body must be a JSON object";
  if (j.contains("messages")) {
    const auto& msgs = j.at("messages");
    if (!msgs.is_array() || msgs.empty()) return "messages must be a non-empty array";
    for (const auto& m : msgs) {
      if (!m.is_object() || !m.contains("content") || !m.at("content").is_string()) {
        return "every message needs string content";
      }
      if (m.value("role", std::string()) == "user") out.text = m.at("content").get<std::string>();
    }
    if (out.text.empty()) return "no non-empty user message";
  } else if (j.contains("prompt")) {
    if (!j.at("prompt").is_string()) return "prompt must be a string";
    out.text = j.at("prompt").get<std::string>();
    if (out.text.empty()) return "prompt is empty";
  } else {
    return "request needs messages or prompt";
  }
  if (j.contains("task_kind")) {
    if (!j.at("task_kind").is_string()) return "task_kind must be a string";
    try {
      out.kind = parse_task_kind(j.at("task_kind").get<std::string>());
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
  }
  return std::nullopt;
}

}  // namespace

Gateway::Gateway(std::unique_ptr<backends::Backend> slm, std::unique_ptr<backends::Backend> llm,
                 std::shared_ptr<const predictor::Predictor> model, policy::PolicyConfig cfg)
    : slm_(std::move(slm)), llm_(std::move(llm)), model_(std::move(model)), runner_(*slm_, *llm_, nullptr, cfg) {
  if (!model_) throw ConfigError("gateway needs a model");
}

std::unique_ptr<Gateway> Gateway::from_config(const GatewayConfig& cfg) {
  cfg.validate();
  auto model = std::make_shared<predictor::ShepherdModel>(predictor::ShepherdModel::load(cfg.model_path));
  if (model->mode() != cfg.mode) {
    throw ConfigError("model was trained in " + std::string(predictor::to_string(model->mode())) +
                      " mode but the gateway is configured for " + std::string(predictor::to_string(cfg.mode)));
  }
  return std::make_unique<Gateway>(backends::make_backend(cfg.slm), backends::make_backend(cfg.llm),
                                   std::move(model), cfg.policy);
}

HttpResponse Gateway::handle_completion(const std::string& body) {
  ++requests_;
  ParsedRequest req;
  if (auto err = parse_request(body, req)) {
    std::lock_guard lock(mutex_);
    ++errors_[400];
    return error_response(400, "invalid_request_error", *err);
  }
  const auto id = "req-" + std::to_string(next_id_++);
  const Query q = Query::make(id, req.text, req.kind);

  policy::Outcome out;
  try {
    out = model_->mode() == predictor::FeatureMode::reactive ? runner_.run_reactive(q, *model_)
                                                             : runner_.run_proactive(q, *model_);
  } catch (const policy::ExecutionError& e) {
    ledger_.merge(e.partial().usage);
    {
      std::lock_guard lock(mutex_);
      ++errors_[502];
    }
    spdlog::warn("{}: upstream failure after {} attempt(s)", id, e.attempts());
    auto resp = error_response(502, "upstream_error", e.what(), policy::to_json(e.partial()));
    resp.headers["x-shepherd-decision"] = std::string(policy::to_string(e.partial().decision.kind));
    return resp;
  } catch (const TransportError& e) {
    std::lock_guard lock(mutex_);
    ++errors_[502];
    return error_response(502, "upstream_error", e.what());
  }

  ledger_.merge(out.usage);
  const std::string variant =
      out.consensus_hit ? std::string("consensus") : std::string(policy::to_string(out.decision.kind));
  {
    std::lock_guard lock(mutex_);
    ++histogram_[variant];
    latency_total_ += out.decision_latency;
    ++latency_count_;
  }

  const auto slm_t = out.usage.totals(backends::Role::slm);
  const auto llm_t = out.usage.totals(backends::Role::llm);
  nlohmann::json body_json{
      {"id", id},
      {"object", "chat.completion"},
      {"model", "shepherd"},
      {"choices",
       nlohmann::json::array({{{"index", 0},
                               {"message", {{"role", "assistant"}, {"content", out.final_text}}},
                               {"finish_reason", "stop"}}})},
      {"usage",
       {{"prompt_tokens", slm_t.input_tokens + llm_t.input_tokens},
        {"completion_tokens", slm_t.output_tokens + llm_t.output_tokens},
        {"total_tokens", slm_t.input_tokens + llm_t.input_tokens + slm_t.output_tokens + llm_t.output_tokens}}},
      {"shepherd",
       {{"decision", out.decision},
        {"consensus_hit", out.consensus_hit},
        {"hint_tokens", out.hint_tokens_used},
        {"cost_usd", out.dollars.to_string()}}}};
  HttpResponse resp{200, body_json.dump(), "application/json", {}};
  resp.headers["x-shepherd-decision"] = variant;
  resp.headers["x-shepherd-hint-tokens"] = std::to_string(out.hint_tokens_used);
  resp.headers["x-shepherd-cost-usd"] = out.dollars.to_string();
  return resp;
}

std::map<std::string, std::size_t> Gateway::decision_histogram() const {
  std::lock_guard lock(mutex_);
  return histogram_;
}

std::string Gateway::metrics_text() const {
  const auto ledger = ledger_.snapshot();
  std::ostringstream os;
  os << "shepherd_requests_total " << requests_.load() << '\n';
  std::lock_guard lock(mutex_);
  for (const auto& [kind, n] : histogram_) os << "shepherd_decisions_total{variant=\"" << kind << "\"} " << n << '\n';
  for (const auto& [code, n] : errors_) os << "shepherd_errors_total{status=\"" << code << "\"} " << n << '\n';
  for (auto role : {backends::Role::slm, backends::Role::llm}) {
    const auto t = ledger.totals(role);
    const auto r = backends::to_string(role);
    os << "shepherd_tokens_total{role=\"" << r << "\",direction=\"input\"} " << t.input_tokens << '\n';
    os << "shepherd_tokens_total{role=\"" << r << "\",direction=\"output\"} " << t.output_tokens << '\n';
    os << "shepherd_cost_usd_total{role=\"" << r << "\"} " << t.dollars.to_string() << '\n';
  }
  os << "shepherd_cost_usd_total " << ledger.total().to_string() << '\n';
  const double mean_s = latency_count_ == 0 ? 0.0
                                            : std::chrono::duration<double>(latency_total_).count() /
                                                  static_cast<double>(latency_count_);
  os << "shepherd_decision_latency_seconds_mean " << mean_s << '\n';
  return os.str();
}

bool Gateway::serve(const std::string& host, int port, std::size_t threads) {
  httplib::Server server;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_completion(req.body);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  });
  server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(metrics_text(), "text/plain; version=0.0.4");
  });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok\n", "text/plain"); });
  server_ = &server;
  spdlog::info("gateway listening on {}:{}", host, port);
  const bool ok = server.listen(host, port);
  server_ = nullptr;
  return ok;
}

void Gateway::stop() {
  if (auto* s = server_.load()) s->stop();
}

}  // namespace shepherd::gateway
