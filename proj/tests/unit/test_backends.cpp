#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "fixtures.hpp"
#include "shepherd/backends/ledger.hpp"
#include "shepherd/backends/mock_backend.hpp"
#include "shepherd/backends/openai_backend.hpp"
#include "shepherd/core/errors.hpp"
#include "shepherd/policy/prompt.hpp"

using namespace shepherd;
using namespace shepherd::backends;
using shepherd::fixtures::mock_spec;

namespace {

MockScript demo_script() {
  MockScript s;
  MockEntry e;
  e.question = "What is 6 times 7?";
  e.response = "Six sevens make 42";
  e.hinted = {{3, std::nullopt, "with hint 42"}, {5, 6, "window wrong 41"}};
  e.samples = {"sample one 42", "sample two 40"};
  e.entropy = {0.5, 1.5};
  s.add(e);
  MockEntry down;
  down.question = "down";
  down.response = "x";
  down.fail = true;
  s.add(down);
  return s;
}

TokenSequence prompt_for(const std::string& q, std::optional<std::string> hint = std::nullopt) {
  return tokenize(policy::render_prompt(q, hint ? std::optional<std::string_view>(*hint) : std::nullopt));
}

BackendSpec http_spec() {
  BackendSpec s;
  s.kind = BackendKind::http_openai_compatible;
  s.role = Role::llm;
  s.model_name = "remote";
  s.endpoint_url = "http://127.0.0.1:9";
  s.max_output_tokens = 64;
  s.initial_backoff = std::chrono::milliseconds(1);
  s.max_attempts = 3;
  return s;
}

std::string ok_body(const std::string& content, int prompt_tokens = 7, int completion_tokens = 3) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}},
                                      {"finish_reason", "stop"}}}},
                        {"usage", {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}}}}
      .dump();
}

}  // namespace

TEST(MockBackend, BudgetReturnsExactPrefix) {
  MockBackend m(mock_spec(Role::llm), std::make_shared<const MockScript>(demo_script()));
  const auto full = m.generate(prompt_for("What is 6 times 7?"), DecodingParams::deterministic(100));
  EXPECT_EQ(full.text, "Six sevens make 42");
  EXPECT_EQ(full.finish_reason, FinishReason::natural_stop);
  for (std::size_t n = 0; n <= full.tokens.size(); ++n) {
    const auto r = m.generate(prompt_for("What is 6 times 7?"), DecodingParams::deterministic(n));
    EXPECT_EQ(r.tokens, prefix(full.tokens, static_cast<std::ptrdiff_t>(n)));
    EXPECT_EQ(r.usage.output_tokens, n);
  }
  EXPECT_TRUE(m.exact_prefix());
}

TEST(MockBackend, ZeroBudgetSkipsUpstream) {
  MockBackend m(mock_spec(Role::llm), std::make_shared<const MockScript>(demo_script()));
  const auto r = m.generate(prompt_for("What is 6 times 7?"), DecodingParams::deterministic(0));
  EXPECT_TRUE(r.text.empty());
  EXPECT_EQ(r.finish_reason, FinishReason::budget_exhausted);
  EXPECT_EQ(m.calls(), 0u);
}

TEST(MockBackend, HintRulesByTokenCountLastMatchWins) {
  MockBackend m(mock_spec(Role::slm), std::make_shared<const MockScript>(demo_script()));
  auto text = [&](std::string hint) {
    return m.generate(prompt_for("What is 6 times 7?", hint), DecodingParams::deterministic(64)).text;
  };
  EXPECT_EQ(text("a b"), "Six sevens make 42");
  EXPECT_EQ(text("a b c"), "with hint 42");
  EXPECT_EQ(text("a b c d e"), "window wrong 41");
  EXPECT_EQ(text("a b c d e f"), "window wrong 41");
  EXPECT_EQ(text("a b c d e f g"), "with hint 42");
}

TEST(MockBackend, SeededSamplesAndEntropy) {
  MockBackend m(mock_spec(Role::slm), std::make_shared<const MockScript>(demo_script()));
  const auto p = prompt_for("What is 6 times 7?");
  EXPECT_EQ(m.generate(p, {0.3, 0.95, 64, 1}).text, "sample one 42");
  EXPECT_EQ(m.generate(p, {0.3, 0.95, 64, 2}).text, "sample two 40");
  EXPECT_EQ(m.generate(p, {0.3, 0.95, 64, 3}).text, "sample one 42");
  EXPECT_EQ(m.generate(p, {0.3, 0.95, 64, std::nullopt}).text, "Six sevens make 42");
  const auto r = m.generate(p, DecodingParams::deterministic(64));
  ASSERT_TRUE(r.token_logprobs);
  EXPECT_EQ(r.token_logprobs->size(), r.tokens.size());
  EXPECT_DOUBLE_EQ((*r.token_logprobs)[0], -0.5);
  EXPECT_DOUBLE_EQ((*r.token_logprobs)[1], -1.5);
}

TEST(MockBackend, FailuresAndUnknownQuestions) {
  MockBackend m(mock_spec(Role::slm), std::make_shared<const MockScript>(demo_script()));
  try {
    m.generate(prompt_for("down"), DecodingParams::deterministic(8));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retryable());
  }
  try {
    m.generate(prompt_for("unscripted"), DecodingParams::deterministic(8));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.retryable());
  }
}

TEST(MockBackend, BudgetAboveNmaxRejectedBeforeCall) {
  MockBackend m(mock_spec(Role::llm, hosted_llama70b_pricing(), 16), std::make_shared<const MockScript>(demo_script()));
  EXPECT_THROW(m.generate(prompt_for("What is 6 times 7?"), DecodingParams::deterministic(17)), ConfigError);
  EXPECT_EQ(m.calls(), 0u);
}

TEST(MockScript, JsonRoundTripAndSchema) {
  const auto s = demo_script();
  const auto path = (std::filesystem::temp_directory_path() / "shepherd_mock_rt.json").string();
  s.save(path);
  const auto back = MockScript::load(path);
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_EQ(back.size(), 2u);
  auto j = s.to_json();
  j["schema"] = "shepherd-mock/99";
  EXPECT_THROW(MockScript::from_json(j), SchemaError);
  std::filesystem::remove(path);
}

TEST(Ledger, ChargesFollowSpecPrices) {
  UsageLedger ledger;
  const auto spec = mock_spec(Role::llm);
  ledger.record(spec, TokenUsage{100, 40});
  EXPECT_EQ(ledger.total().pico(), 100 * 590'000 + 40 * 790'000);
  EXPECT_EQ(ledger.totals(Role::llm).output_tokens, 40u);
  EXPECT_EQ(ledger.totals(Role::slm).input_tokens, 0u);
  EXPECT_EQ(ledger.rederive_total(), ledger.total());
}

TEST(Ledger, FunctionalRecordLeavesInputUntouched) {
  const UsageLedger empty;
  GenerationResult r;
  r.usage = {10, 5};
  const auto after = record_usage(empty, r, mock_spec(Role::llm));
  EXPECT_EQ(empty.events().size(), 0u);
  EXPECT_EQ(after.events().size(), 1u);
}

TEST(Ledger, FailedCallsAreNotBilled) {
  MockBackend m(mock_spec(Role::llm), std::make_shared<const MockScript>(demo_script()));
  UsageLedger ledger;
  EXPECT_THROW(generate(m, prompt_for("down"), DecodingParams::deterministic(4), ledger), TransportError);
  EXPECT_EQ(ledger.events().size(), 0u);
  generate(m, prompt_for("What is 6 times 7?"), DecodingParams::deterministic(4), ledger);
  EXPECT_EQ(ledger.events().size(), 1u);
}

TEST(Ledger, SharedLedgerConservesUnderConcurrency) {
  SharedLedger shared;
  const auto spec = mock_spec(Role::llm);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 250; ++i) {
        UsageLedger l;
        l.record(spec, TokenUsage{3, 2});
        shared.merge(l);
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto snap = shared.snapshot();
  EXPECT_EQ(snap.events().size(), 2000u);
  EXPECT_EQ(snap.total(), snap.rederive_total());
  EXPECT_EQ(snap.total().pico(), 2000LL * (3 * 590'000 + 2 * 790'000));
}

TEST(BackendSpec, JsonUsesPerMillionPrices) {
  const auto j = nlohmann::json::parse(R"({"kind":"mock","model_name":"m","role":"llm",
      "price_in_per_million":0.59,"price_out_per_million":0.79})");
  const auto s = j.get<BackendSpec>();
  EXPECT_EQ(s.price_in.pico(), 590'000);
  EXPECT_EQ(nlohmann::json(s).get<BackendSpec>().price_out, s.price_out);
  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"carrier-pigeon","model_name":"m"})").get<BackendSpec>(), ConfigError);
  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"http","model_name":"m"})").get<BackendSpec>(), ConfigError);
  const auto cm = cost_model(mock_spec(Role::slm), mock_spec(Role::llm));
  EXPECT_EQ(cm, hosted_llama70b_pricing());
}

TEST(OpenAI, RequestCarriesBudgetAndSampling) {
  auto spec = http_spec();
  spec.request_logprobs = true;
  const auto body = build_completion_request(spec, tokenize("hi there"), {0.3, 0.9, 12, 5});
  EXPECT_EQ(body["model"], "remote");
  EXPECT_EQ(body["messages"][0]["content"], "hi there");
  EXPECT_EQ(body["max_tokens"], 12);
  EXPECT_EQ(body["max_new_tokens"], 12);
  EXPECT_EQ(body["seed"], 5);
  EXPECT_EQ(body["stream"], false);
  EXPECT_EQ(body["logprobs"], true);
  EXPECT_THROW(build_completion_request(spec, tokenize("x"), DecodingParams::deterministic(65)), ConfigError);
  EXPECT_THROW(build_completion_request(mock_spec(Role::llm), tokenize("x"), DecodingParams::deterministic(1)),
               ConfigError);
}

TEST(OpenAI, ResponseParsing) {
  const auto spec = http_spec();
  auto j = nlohmann::json::parse(ok_body("the answer is 9"));
  j["choices"][0]["finish_reason"] = "length";
  j["choices"][0]["logprobs"] = {{"content", {{{"logprob", -0.25}}, {{"logprob", -0.75}}}}};
  const auto r = parse_completion_response(j, spec, tokenize("q"));
  EXPECT_EQ(r.text, "the answer is 9");
  EXPECT_EQ(r.finish_reason, FinishReason::budget_exhausted);
  EXPECT_EQ(r.usage, (TokenUsage{7, 3}));
  ASSERT_TRUE(r.token_logprobs);
  EXPECT_EQ(r.token_logprobs->size(), 2u);

  j.erase("usage");
  const auto counted = parse_completion_response(j, spec, tokenize("a b"));
  EXPECT_EQ(counted.usage, (TokenUsage{2, 4}));
}

TEST(OpenAI, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  OpenAICompatibleBackend b(http_spec(), [&](const std::string&) {
    const int c = ++calls;
    if (c == 1) return HttpReply{0, "", "connection refused"};
    if (c == 2) return HttpReply{503, "busy", ""};
    return HttpReply{200, ok_body("fine 1"), ""};
  });
  const auto r = b.generate(tokenize("q"), DecodingParams::deterministic(8));
  EXPECT_EQ(r.text, "fine 1");
  EXPECT_EQ(calls.load(), 3);
}

TEST(OpenAI, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  OpenAICompatibleBackend b(http_spec(), [&](const std::string&) {
    ++calls;
    return HttpReply{429, "slow down", ""};
  });
  try {
    b.generate(tokenize("q"), DecodingParams::deterministic(8));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(OpenAI, ClientErrorsAreNotRetried) {
  std::atomic<int> calls{0};
  OpenAICompatibleBackend b(http_spec(), [&](const std::string&) {
    ++calls;
    return HttpReply{400, "bad", ""};
  });
  EXPECT_THROW(b.generate(tokenize("q"), DecodingParams::deterministic(8)), TransportError);
  EXPECT_EQ(calls.load(), 1);

  OpenAICompatibleBackend garbage(http_spec(), [](const std::string&) { return HttpReply{200, "{not json", ""}; });
  EXPECT_THROW(garbage.generate(tokenize("q"), DecodingParams::deterministic(8)), TransportError);
}

TEST(OpenAI, InFlightBound) {
  auto spec = http_spec();
  spec.max_in_flight = 2;
  std::atomic<int> now{0}, peak{0};
  OpenAICompatibleBackend b(spec, [&](const std::string&) {
    const int v = ++now;
    int p = peak.load();
    while (v > p && !peak.compare_exchange_weak(p, v)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --now;
    return HttpReply{200, ok_body("ok 1"), ""};
  });
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { b.generate(tokenize("q"), DecodingParams::deterministic(4)); });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(peak.load(), 2);
}
