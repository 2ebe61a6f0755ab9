#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "shepherd/core/errors.hpp"
#include "shepherd/gateway/config.hpp"
#include "shepherd/gateway/gateway.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

using namespace shepherd;
using namespace shepherd::gateway;

namespace {

struct Rig {
  std::unique_ptr<Gateway> gw;
  backends::MockBackend* slm = nullptr;
  backends::MockBackend* llm = nullptr;
};

// "easy" needs nothing, "mid" needs 4 hint tokens, "hard" goes to the LLM,
// "down" has an SLM outage.
Rig rig(predictor::FeatureMode mode = predictor::FeatureMode::proactive) {
  backends::MockScript slm, llm;
  const std::string ten = "a b c d e f g h i";
  for (const auto& [q, ans] : std::vector<std::pair<std::string, std::string>>{
           {"easy", "11"}, {"mid", "22"}, {"hard", "33"}, {"down", "44"}}) {
    llm.add({q, ten + " " + ans, {}, {}, {}, false});
    backends::MockEntry e{q, q == "easy" ? "got 11" : "got 0", {}, {}, {}, q == "down"};
    if (q == "mid") e.hinted.push_back({4, std::nullopt, "got 22"});
    e.samples = q == "easy" ? std::vector<std::string>{"11", "11", "11"} : std::vector<std::string>{"1", "2", "3"};
    slm.add(e);
  }
  auto m = fixtures::mocks_for(std::move(slm), std::move(llm));
  Rig r;
  r.slm = m.slm.get();
  r.llm = m.llm.get();
  auto model = std::make_shared<fixtures::FnPredictor>(
      [](const Query& q) -> predictor::Prediction {
        if (q.text() == "easy") return {-5, predictor::sigmoid(-5), 0};
        if (q.text() == "hard") return {5, predictor::sigmoid(5), std::log1p(500.0)};
        return {5, predictor::sigmoid(5), std::log1p(4.0)};
      },
      mode);
  policy::PolicyConfig pc;
  pc.eta_hint = 100;
  r.gw = std::make_unique<Gateway>(std::move(m.slm), std::move(m.llm), model, pc);
  return r;
}

std::string ask(const std::string& q) {
  return nlohmann::json{{"messages", {{{"role", "system"}, {"content", "be brief"}}, {{"role", "user"}, {"content", q}}}}}
      .dump();
}

}  // namespace

TEST(Config, EnvInterpolation) {
  ::setenv("SHEPHERD_TEST_HOST", "example.invalid", 1);
  EXPECT_EQ(interpolate_env("http://${SHEPHERD_TEST_HOST}/v1"), "http://example.invalid/v1");
  EXPECT_EQ(interpolate_env("plain"), "plain");
  ::unsetenv("SHEPHERD_TEST_UNSET");
  EXPECT_THROW(interpolate_env("${SHEPHERD_TEST_UNSET}"), ConfigError);
  EXPECT_THROW(interpolate_env("${OPEN"), ConfigError);
  const auto j = interpolate_env_json({{"a", {"x${SHEPHERD_TEST_HOST}", 3}}});
  EXPECT_EQ(j["a"][0], "xexample.invalid");
  EXPECT_EQ(j["a"][1], 3);
}

TEST(Config, LoadValidatesAndForcesRoles) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "shepherd_gw.json").string();
  ::setenv("SHEPHERD_TEST_PORT_HOST", "0.0.0.0", 1);
  {
    std::ofstream(path) << R"({"slm":{"kind":"mock","model_name":"s","mock_script":"s.json"},
      "llm":{"kind":"mock","model_name":"l","mock_script":"l.json","price_in_per_million":0.59},
      "mode":"proactive","model_path":"m.json","host":"${SHEPHERD_TEST_PORT_HOST}","port":9000})";
  }
  const auto cfg = load_gateway_config(path);
  EXPECT_EQ(cfg.host, "0.0.0.0");
  EXPECT_EQ(cfg.port, 9000);
  EXPECT_EQ(cfg.slm.role, backends::Role::slm);
  EXPECT_EQ(cfg.llm.role, backends::Role::llm);
  EXPECT_EQ(cfg.llm.price_in, Money::per_million_tokens(0.59));
  {
    std::ofstream(path) << R"({"slm":{"kind":"mock","model_name":"s"},"llm":{"kind":"mock","model_name":"l"}})";
  }
  EXPECT_THROW(load_gateway_config(path), SchemaError);
  std::filesystem::remove(path);
}

TEST(Gateway, MalformedBodiesNeverReachBackends) {
  auto r = rig();
  for (const std::string body : {"not json", "[]", R"({"messages":[]})", R"({"messages":[{"role":"user"}]})",
                                 R"({"prompt":""})", R"({"other":1})", R"({"prompt":"x","task_kind":"poetry"})"}) {
    const auto resp = r.gw->handle_completion(body);
    EXPECT_EQ(resp.status, 400) << body;
    EXPECT_EQ(nlohmann::json::parse(resp.body).at("error").at("type"), "invalid_request_error");
  }
  EXPECT_EQ(r.slm->calls() + r.llm->calls(), 0u);
  EXPECT_EQ(r.gw->ledger().total(), Money{});
}

TEST(Gateway, RoutesAndReportsDecisions) {
  auto r = rig();
  const auto easy = r.gw->handle_completion(ask("easy"));
  EXPECT_EQ(easy.status, 200);
  EXPECT_EQ(easy.headers.at("x-shepherd-decision"), "slm_only");
  EXPECT_EQ(easy.headers.at("x-shepherd-cost-usd"), "0");
  EXPECT_EQ(r.llm->calls(), 0u);

  const auto mid = r.gw->handle_completion(R"({"prompt":"mid"})");
  EXPECT_EQ(mid.headers.at("x-shepherd-decision"), "hint");
  EXPECT_EQ(mid.headers.at("x-shepherd-hint-tokens"), "4");
  const auto body = nlohmann::json::parse(mid.body);
  EXPECT_EQ(body["choices"][0]["message"]["content"], "got 22");
  EXPECT_EQ(body["shepherd"]["decision"]["variant"], "hint");

  const auto hard = r.gw->handle_completion(ask("hard"));
  EXPECT_EQ(hard.headers.at("x-shepherd-decision"), "full_llm");
  EXPECT_NE(hard.body.find("33"), std::string::npos);

  const auto hist = r.gw->decision_histogram();
  EXPECT_EQ(hist.at("slm_only"), 1u);
  EXPECT_EQ(hist.at("hint"), 1u);
  EXPECT_EQ(hist.at("full_llm"), 1u);
  EXPECT_EQ(r.gw->requests(), 3u);

  Money headers;
  for (const auto* resp : {&easy, &mid, &hard}) headers += Money::parse(resp->headers.at("x-shepherd-cost-usd"));
  EXPECT_EQ(r.gw->ledger().total(), headers);
  EXPECT_EQ(r.gw->ledger().rederive_total(), headers);
  const auto text = r.gw->metrics_text();
  EXPECT_NE(text.find("shepherd_decisions_total{variant=\"hint\"} 1"), std::string::npos);
}

TEST(Gateway, UpstreamFailureIs502WithTrace) {
  auto r = rig();
  const auto resp = r.gw->handle_completion(ask("down"));
  EXPECT_EQ(resp.status, 502);
  EXPECT_EQ(resp.headers.at("x-shepherd-decision"), "hint");
  const auto j = nlohmann::json::parse(resp.body);
  EXPECT_EQ(j["error"]["type"], "upstream_error");
  EXPECT_EQ(j["error"]["trace"]["decision"]["variant"], "hint");
  // The hint was already billed before the SLM failed.
  EXPECT_GT(r.gw->ledger().total(), Money{});
  EXPECT_NE(r.gw->metrics_text().find("shepherd_errors_total{status=\"502\"} 1"), std::string::npos);
}

TEST(Gateway, ReactiveConsensusCountedSeparately) {
  auto r = rig(predictor::FeatureMode::reactive);
  const auto resp = r.gw->handle_completion(ask("easy"));
  EXPECT_EQ(resp.headers.at("x-shepherd-decision"), "consensus");
  EXPECT_EQ(r.gw->decision_histogram().at("consensus"), 1u);
  EXPECT_EQ(r.llm->calls(), 0u);
}

TEST(Gateway, ServesOverHttp) {
  auto r = rig();
  const int port = 18000 + static_cast<int>(::getpid() % 2000);
  std::thread server([&] { r.gw->serve("127.0.0.1", port, 2); });
  httplib::Client cli("127.0.0.1", port);
  httplib::Result health;
  for (int i = 0; i < 100 && !(health = cli.Get("/healthz")); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  const auto res = cli.Post("/v1/chat/completions", ask("mid"), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("x-shepherd-decision"), "hint");
  const auto metrics = cli.Get("/metrics");
  ASSERT_TRUE(metrics);
  EXPECT_NE(metrics->body.find("shepherd_requests_total"), std::string::npos);
  r.gw->stop();
  server.join();
}
