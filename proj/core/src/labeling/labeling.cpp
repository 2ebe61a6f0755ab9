#include "shepherd/labeling/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "shepherd/core/errors.hpp"
#include "shepherd/core/parallel.hpp"
#include "shepherd/policy/answer.hpp"
#include "shepherd/policy/prompt.hpp"

namespace shepherd::labeling {

using backends::Backend;
using backends::GenerationResult;
using backends::UsageLedger;

std::vector<std::size_t> grid_sizes(std::size_t full_len, int step_pct) {
  if (step_pct != 5 && step_pct != 10 && step_pct != 20 && step_pct != 25) {
    throw ConfigError("grid step must be 5, 10, 20 or 25 percent, got " + std::to_string(step_pct));
  }
  std::vector<std::size_t> grid;
  for (int p = 0; p <= 90; p += step_pct) {
    const std::size_t n = static_cast<std::size_t>(p) * full_len / 100;
    if (grid.empty() || grid.back() != n) grid.push_back(n);
  }
  return grid;
}

int outlier_count(std::span<const bool> flags) {
  if (flags.size() != 11) {
    throw ConfigError("outlier_count needs 11 flags, got " + std::to_string(flags.size()));
  }
  const auto correct = std::count(flags.begin(), flags.end(), true);
  return static_cast<int>(std::min<std::ptrdiff_t>(correct, 11 - correct));
}

namespace {

struct SlmRun {
  bool correct = false;
  std::size_t output_tokens = 0;
};

SlmRun run_slm(const Query& q, const std::optional<std::string>& hint, Backend& slm, const QualityJudge& judge,
               UsageLedger& ledger) {
  const auto prompt = tokenize(policy::render_prompt(q.text(), hint), slm.spec().tokenizer);
  const auto out = backends::generate(slm, prompt, DecodingParams::deterministic(slm.spec().max_output_tokens), ledger);
  return {judge.satisfactory(q, out.text), out.tokens.size()};
}

std::optional<double> mean_entropy(const GenerationResult& r) {
  if (!r.token_logprobs || r.token_logprobs->empty()) return std::nullopt;
  double sum = 0.0;
  for (double lp : *r.token_logprobs) sum -= lp;
  return sum / static_cast<double>(r.token_logprobs->size());
}

}  // namespace

LabeledExample label_query(const Query& q, Backend& slm, Backend& llm, const QualityJudge& judge,
                           const LabelConfig& cfg, UsageLedger* ledger_out) {
  if (!q.ground_truth) throw ConfigError("query '" + q.id + "' has no ground truth to label against");
  UsageLedger ledger;

  const std::string unhinted = policy::render_prompt(q.text());
  const auto llm_prompt = tokenize(unhinted, llm.spec().tokenizer);
  const auto reference =
      backends::generate(llm, llm_prompt, DecodingParams::deterministic(llm.spec().max_output_tokens), ledger);

  LabeledExample ex;
  ex.query = q;
  ex.prompt_tokens = llm_prompt.size();
  ex.full_llm_len = reference.tokens.size();
  ex.llm_correct = judge.satisfactory(q, reference.text);
  ex.grid = grid_sizes(ex.full_llm_len, cfg.step_pct);

  std::optional<std::size_t> first_pass;
  for (std::size_t n : ex.grid) {
    std::optional<std::string> hint;
    if (n > 0) {
      if (llm.exact_prefix()) {
        hint = prefix(reference.tokens, static_cast<std::ptrdiff_t>(n)).text();
      } else {
        hint = backends::generate(llm, llm_prompt, DecodingParams::deterministic(n), ledger).text;
      }
    }
    const SlmRun run = run_slm(q, hint, slm, judge, ledger);
    ex.per_budget_correct.push_back(run.correct);
    ex.slm_output_tokens.push_back(run.output_tokens);
    if (run.correct && !first_pass) first_pass = n;
  }
  ex.full_hint_correct = run_slm(q, reference.text, slm, judge, ledger).correct;

  ex.unsolvable = !first_pass.has_value();
  ex.n_star = first_pass.value_or(ex.full_llm_len);
  ex.y = ex.n_star > 0;
  ex.r = std::log1p(static_cast<double>(ex.n_star));

  if (cfg.step_pct == 10) {
    std::map<std::size_t, bool> by_budget;
    for (std::size_t i = 0; i < ex.grid.size(); ++i) by_budget.emplace(ex.grid[i], ex.per_budget_correct[i]);
    std::array<bool, 11> flags{};
    for (std::size_t level = 0; level < 10; ++level) flags[level] = by_budget.at(level * 10 * ex.full_llm_len / 100);
    flags[10] = ex.full_hint_correct;
    ex.outlier_count = outlier_count(flags);
  }

  if (cfg.reactive_samples > 0) {
    const auto slm_prompt = tokenize(unhinted, slm.spec().tokenizer);
    for (std::size_t s = 1; s <= cfg.reactive_samples; ++s) {
      DecodingParams p{cfg.sample_temperature, cfg.sample_top_p, slm.spec().max_output_tokens, s};
      const auto out = backends::generate(slm, slm_prompt, p, ledger);
      ex.slm_samples.push_back({policy::extract_answer(out.text, q.task_kind), out.tokens.size(), mean_entropy(out)});
    }
  }

  if (ledger_out) ledger_out->merge(ledger);
  return ex;
}

LabelingRun label_dataset(const std::vector<Query>& queries, Backend& slm, Backend& llm, const QualityJudge& judge,
                          const LabelConfig& cfg) {
  struct Slot {
    std::optional<LabeledExample> example;
    std::string error;
    UsageLedger usage;
  };
  std::vector<Slot> slots(queries.size());
  parallel_for(queries.size(), cfg.worker_threads, [&](std::size_t i) {
    try {
      slots[i].example = label_query(queries[i], slm, llm, judge, cfg, &slots[i].usage);
    } catch (const TransportError& e) {
      slots[i].error = std::string("backend_failure: ") + e.what();
    }
  });

  LabelingRun run;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    run.usage.merge(slots[i].usage);
    if (slots[i].example) {
      run.examples.push_back(std::move(*slots[i].example));
    } else {
      spdlog::warn("skipping query {}: {}", queries[i].id, slots[i].error);
      run.skipped.push_back({queries[i].id, std::move(slots[i].error)});
    }
  }
  return run;
}

FilterResult filter_dataset(std::vector<LabeledExample> examples, int outlier_threshold) {
  FilterResult out;
  for (auto& ex : examples) {
    if (ex.unsolvable && !ex.llm_correct) {
      out.dropped.push_back({ex.query.id, "llm_incorrect_no_hint_helps"});
    } else if (outlier_threshold > 0 && ex.outlier_count >= outlier_threshold) {
      out.dropped.push_back({ex.query.id, "outliers_ge_" + std::to_string(outlier_threshold)});
    } else {
      out.kept.push_back(std::move(ex));
    }
  }
  return out;
}

std::size_t size_bucket(std::size_t n_star, std::size_t full_len) {
  for (std::size_t level = 1; level <= 9; ++level) {
    if (level * 10 * full_len / 100 >= n_star) return level - 1;
  }
  return 8;
}

DatasetStats dataset_stats(std::span<const LabeledExample> examples) {
  if (examples.empty()) throw ConfigError("dataset_stats needs at least one example");
  DatasetStats s;
  s.count = examples.size();
  std::vector<double> positive;
  std::size_t zero = 0, unsolvable = 0;
  std::array<std::size_t, 9> buckets{};
  for (const auto& ex : examples) {
    if (ex.unsolvable) {
      ++unsolvable;
    } else if (ex.n_star == 0) {
      ++zero;
    } else {
      ++buckets[size_bucket(ex.n_star, ex.full_llm_len)];
      positive.push_back(static_cast<double>(ex.n_star));
    }
  }
  const double n = static_cast<double>(s.count);
  s.p_zero = static_cast<double>(zero) / n;
  s.p_unsolvable = static_cast<double>(unsolvable) / n;
  for (std::size_t b = 0; b < 9; ++b) s.bucket_masses[b] = static_cast<double>(buckets[b]) / n;
  if (!positive.empty()) {
    double mean = 0.0;
    for (double v : positive) mean += v;
    mean /= static_cast<double>(positive.size());
    double var = 0.0;
    for (double v : positive) var += (v - mean) * (v - mean);
    s.positive_size_std = std::sqrt(var / static_cast<double>(positive.size()));
  }
  return s;
}

nlohmann::json to_json(const DatasetStats& s) {
  return {{"count", s.count},
          {"p_zero", s.p_zero},
          {"bucket_masses", s.bucket_masses},
          {"p_unsolvable", s.p_unsolvable},
          {"positive_size_std", s.positive_size_std}};
}

void to_json(nlohmann::json& j, const LabeledExample& e) {
  nlohmann::json query{{"id", e.query.id}, {"text", e.query.text()}, {"task_kind", to_string(e.query.task_kind)}};
  if (e.query.ground_truth) query["ground_truth"] = *e.query.ground_truth;
  auto samples = nlohmann::json::array();
  for (const auto& s : e.slm_samples) {
    nlohmann::json js{{"answer", s.answer}, {"output_tokens", s.output_tokens}};
    if (s.entropy) js["entropy"] = *s.entropy;
    samples.push_back(std::move(js));
  }
  j = {{"schema", kLabelSchema},
       {"query", std::move(query)},
       {"full_llm_len", e.full_llm_len},
       {"grid", e.grid},
       {"per_budget_correct", e.per_budget_correct},
       {"n_star", e.n_star},
       {"y", e.y},
       {"r", e.r},
       {"unsolvable", e.unsolvable},
       {"outlier_count", e.outlier_count},
       {"llm_correct", e.llm_correct},
       {"full_hint_correct", e.full_hint_correct},
       {"prompt_tokens", e.prompt_tokens},
       {"slm_output_tokens", e.slm_output_tokens},
       {"slm_samples", std::move(samples)}};
}

void from_json(const nlohmann::json& j, LabeledExample& e) {
  if (j.value("schema", std::string()) != kLabelSchema) {
    throw SchemaError(std::string("label record schema must be ") + kLabelSchema);
  }
  const auto& q = j.at("query");
  std::optional<std::string> truth;
  if (q.contains("ground_truth")) truth = q.at("ground_truth").get<std::string>();
  e.query = Query::make(q.at("id").get<std::string>(), q.at("text").get<std::string>(),
                        parse_task_kind(q.value("task_kind", std::string("math_numeric"))), truth);
  e.full_llm_len = j.at("full_llm_len").get<std::size_t>();
  e.grid = j.at("grid").get<std::vector<std::size_t>>();
  e.per_budget_correct = j.at("per_budget_correct").get<std::vector<bool>>();
  e.n_star = j.at("n_star").get<std::size_t>();
  e.y = j.at("y").get<bool>();
  e.r = j.at("r").get<double>();
  e.unsolvable = j.at("unsolvable").get<bool>();
  e.outlier_count = j.value("outlier_count", 0);
  e.llm_correct = j.value("llm_correct", false);
  e.full_hint_correct = j.value("full_hint_correct", false);
  e.prompt_tokens = j.value("prompt_tokens", e.query.prompt.size());
  e.slm_output_tokens = j.value("slm_output_tokens", std::vector<std::size_t>{});
  e.slm_samples.clear();
  for (const auto& s : j.value("slm_samples", nlohmann::json::array())) {
    SlmSample sample{s.at("answer").get<std::string>(), s.at("output_tokens").get<std::size_t>(), std::nullopt};
    if (s.contains("entropy")) sample.entropy = s.at("entropy").get<double>();
    e.slm_samples.push_back(std::move(sample));
  }
  if (e.grid.size() != e.per_budget_correct.size()) throw SchemaError("grid and per_budget_correct lengths differ");
}

void write_labels(const std::string& path, std::span<const LabeledExample> examples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write labels: " + path);
  for (const auto& ex : examples) out << nlohmann::json(ex).dump() << '\n';
}

std::vector<LabeledExample> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labels: " + path);
  std::vector<LabeledExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(nlohmann::json::parse(line).get<LabeledExample>());
  }
  return out;
}

}  // namespace shepherd::labeling
