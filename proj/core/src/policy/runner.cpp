#include "shepherd/policy/runner.hpp"

#include <map>

#include "shepherd/policy/answer.hpp"
#include "shepherd/policy/prompt.hpp"

namespace shepherd::policy {

using backends::Backend;
using Clock = std::chrono::steady_clock;

nlohmann::json to_json(const Outcome& o) {
  nlohmann::json usage = nlohmann::json::object();
  for (auto role : {backends::Role::slm, backends::Role::llm}) {
    const auto t = o.usage.totals(role);
    usage[std::string(backends::to_string(role))] = {{"input_tokens", t.input_tokens},
                                                     {"output_tokens", t.output_tokens}};
  }
  nlohmann::json j{{"query_id", o.query_id},
                   {"decision", o.decision},
                   {"hint_tokens_used", o.hint_tokens_used},
                   {"extracted_answer", o.extracted_answer},
                   {"usage", std::move(usage)},
                   {"dollars", o.dollars.to_string()},
                   {"consensus_hit", o.consensus_hit},
                   {"decision_latency_us", std::chrono::duration<double, std::micro>(o.decision_latency).count()}};
  j["correct"] = o.correct ? nlohmann::json(*o.correct) : nlohmann::json(nullptr);
  if (!o.sample_answers.empty()) j["sample_answers"] = o.sample_answers;
  return j;
}

ShepherdRunner::ShepherdRunner(Backend& slm, Backend& llm, const QualityJudge* judge, PolicyConfig cfg)
    : slm_(slm), llm_(llm), judge_(judge), cfg_(cfg) {
  cfg_.validate();
}

DecodingParams ShepherdRunner::completion_params(const Backend& b) const {
  return {cfg_.completion_temperature, cfg_.completion_top_p, b.spec().max_output_tokens, cfg_.completion_seed};
}

void ShepherdRunner::finish(const Query& q, Outcome& out) const {
  out.extracted_answer = extract_answer(out.final_text, q.task_kind);
  if (judge_ && q.ground_truth) out.correct = judge_->satisfactory(q, out.final_text);
  out.dollars = out.usage.total();
}

void ShepherdRunner::run_decision(const Query& q, Outcome& out) const {
  const std::string plain = render_prompt(q.text());
  try {
    switch (out.decision.kind) {
      case DecisionKind::slm_only: {
        const auto r = backends::generate(slm_, tokenize(plain, slm_.spec().tokenizer), completion_params(slm_),
                                          out.usage);
        out.final_text = r.text;
        break;
      }
      case DecisionKind::hint: {
        const std::size_t budget = std::min(out.decision.hint_tokens, llm_.spec().max_output_tokens);
        const auto hint = backends::generate(llm_, tokenize(plain, llm_.spec().tokenizer),
                                             DecodingParams::deterministic(budget), out.usage);
        out.hint_tokens_used = hint.tokens.size();
        const auto prompt = tokenize(render_prompt(q.text(), hint.text), slm_.spec().tokenizer);
        out.final_text = backends::generate(slm_, prompt, completion_params(slm_), out.usage).text;
        break;
      }
      case DecisionKind::full_llm: {
        const auto r = backends::generate(llm_, tokenize(plain, llm_.spec().tokenizer), completion_params(llm_),
                                          out.usage);
        out.final_text = r.text;
        break;
      }
    }
  } catch (const TransportError& e) {
    out.dollars = out.usage.total();
    throw ExecutionError(e, out);
  }
}

Outcome ShepherdRunner::execute(const Query& q, const Decision& decision) const {
  Outcome out;
  out.query_id = q.id;
  out.decision = decision;
  run_decision(q, out);
  finish(q, out);
  return out;
}

Outcome ShepherdRunner::run_proactive(const Query& q, const predictor::Predictor& model) const {
  Outcome out;
  out.query_id = q.id;
  const auto t0 = Clock::now();
  out.decision = map_to_decision(model.predict(q), cfg_);
  out.decision_latency = Clock::now() - t0;
  run_decision(q, out);
  finish(q, out);
  return out;
}

Outcome ShepherdRunner::run_reactive(const Query& q, const predictor::Predictor& model) const {
  Outcome out;
  out.query_id = q.id;
  const auto prompt = tokenize(render_prompt(q.text()), slm_.spec().tokenizer);
  std::vector<backends::GenerationResult> samples;
  try {
    for (std::size_t s = 1; s <= cfg_.K; ++s) {
      DecodingParams p{cfg_.sample_temperature, cfg_.sample_top_p, slm_.spec().max_output_tokens, s};
      samples.push_back(backends::generate(slm_, prompt, p, out.usage));
    }
  } catch (const TransportError& e) {
    out.decision = Decision::slm_only("sampling_failed");
    out.dollars = out.usage.total();
    throw ExecutionError(e, out);
  }

  const auto t0 = Clock::now();
  std::vector<labeling::SlmSample> features;
  for (const auto& r : samples) {
    features.push_back(predictor::to_sample(q, r));
    out.sample_answers.push_back(features.back().answer);
  }
  const auto agreed = consensus(out.sample_answers, cfg_.k);

  std::size_t modal = 0;
  if (agreed) {
    out.consensus_hit = true;
    out.decision = Decision::slm_only("consensus");
    modal = static_cast<std::size_t>(
        std::find(out.sample_answers.begin(), out.sample_answers.end(), *agreed) - out.sample_answers.begin());
  } else {
    out.decision = map_to_decision(model.predict(q, features), cfg_);
    std::map<std::string, std::size_t> counts;
    std::size_t best = 0;
    for (std::size_t i = 0; i < out.sample_answers.size(); ++i) {
      const auto& a = out.sample_answers[i];
      if (a.empty()) continue;
      if (const auto c = ++counts[a]; c > best) {
        best = c;
        modal = i;
      }
    }
  }
  out.decision_latency = Clock::now() - t0;

  if (out.decision.kind == DecisionKind::slm_only) {
    out.final_text = samples[modal].text;
  } else {
    run_decision(q, out);
  }
  finish(q, out);
  return out;
}

}  // namespace shepherd::policy
