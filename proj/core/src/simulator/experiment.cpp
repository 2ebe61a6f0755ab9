#include "shepherd/simulator/experiment.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "shepherd/backends/mock_backend.hpp"
#include "shepherd/core/errors.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/core/parallel.hpp"
#include "shepherd/predictor/predictor.hpp"

namespace shepherd::simulator {

using labeling::LabeledExample;
using policy::Decision;
using policy::Outcome;

StrategySpec parse_strategy(const std::string& text) {
  static const char* kNames[] = {"oracle", "proactive", "reactive", "llm_only", "slm_only"};
  for (const char* n : kNames) {
    if (text == n) return {text, std::nullopt};
  }
  const std::string prefix = "fixed_fraction:";
  if (text.rfind(prefix, 0) == 0) {
    double p = -1.0;
    try {
      std::size_t used = 0;
      p = std::stod(text.substr(prefix.size()), &used);
      if (used != text.size() - prefix.size()) p = -1.0;
    } catch (const std::exception&) {
    }
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("fixed_fraction needs a fraction in [0, 1]: " + text);
    return {text, p};
  }
  throw ConfigError("unknown strategy: " + text);
}

namespace {

backends::BackendSpec mock_spec(backends::Role role, Money in, Money out, std::size_t n_max) {
  backends::BackendSpec s;
  s.kind = backends::BackendKind::mock;
  s.role = role;
  s.model_name = role == backends::Role::slm ? "mock-slm" : "mock-llm";
  s.price_in = in;
  s.price_out = out;
  s.max_output_tokens = n_max;
  return s;
}

std::size_t percent(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * double(n)));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.policy.validate();
  if (cfg.trials == 0) throw ConfigError("trials must be >= 1");
  if (cfg.train_fraction <= 0.0 || cfg.val_fraction <= 0.0 || cfg.train_fraction + cfg.val_fraction >= 1.0) {
    throw ConfigError("train/val fractions must be positive and leave room for a test split");
  }
  std::vector<StrategySpec> specs;
  bool need_reactive = false;
  for (const auto& s : cfg.strategies) {
    specs.push_back(parse_strategy(s));
    need_reactive = need_reactive || s == "reactive";
  }

  ExperimentReport rep;
  TraceOptions topt = cfg.trace;
  topt.samples = cfg.policy.K;
  topt.worker_threads = cfg.worker_threads;
  const auto trace = generate_trace(cfg.profile, cfg.queries, cfg.seed, topt);
  rep.scripted = trace_stats(trace);

  auto scripts = build_mock_scripts(trace);
  backends::MockBackend slm(mock_spec(backends::Role::slm, cfg.cost.slm_in, cfg.cost.slm_out, cfg.policy.n_max),
                            std::make_shared<const backends::MockScript>(std::move(scripts.slm)));
  backends::MockBackend llm(mock_spec(backends::Role::llm, cfg.cost.llm_in, cfg.cost.llm_out, cfg.policy.n_max),
                            std::make_shared<const backends::MockScript>(std::move(scripts.llm)));
  const ExactMatchJudge judge;

  std::vector<Query> queries;
  queries.reserve(trace.size());
  for (const auto& sq : trace) queries.push_back(sq.query);
  labeling::LabelConfig lc;
  lc.reactive_samples = need_reactive ? cfg.policy.K : 0;
  lc.sample_temperature = cfg.policy.sample_temperature;
  lc.sample_top_p = cfg.policy.sample_top_p;
  lc.worker_threads = cfg.worker_threads;
  auto labeled = labeling::label_dataset(queries, slm, llm, judge, lc);
  rep.skipped = labeled.skipped.size();

  std::vector<metrics::OracleCostInputs> oracle;
  for (const auto& ex : labeled.examples) oracle.push_back(metrics::oracle_inputs(ex));
  if (cfg.cost.slm_free()) rep.dominance = metrics::dominance_check(oracle, cfg.cost);

  auto filtered = labeling::filter_dataset(std::move(labeled.examples), cfg.outlier_threshold);
  rep.dropped = filtered.dropped.size();
  auto& data = filtered.kept;
  if (data.size() < 10) throw ConfigError("too few labeled examples survive filtering");
  rep.labeled = labeling::dataset_stats(data);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5b1175ULL);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const std::size_t n_train = percent(cfg.train_fraction, data.size());
  const std::size_t n_val = percent(cfg.val_fraction, data.size());
  std::vector<LabeledExample> train_split, val_split, test_split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_train ? train_split : i < n_train + n_val ? val_split : test_split;
    dst.push_back(data[order[i]]);
  }
  rep.train_size = train_split.size();
  rep.val_size = val_split.size();
  rep.test_size = test_split.size();
  if (test_split.empty() || val_split.empty()) throw ConfigError("empty validation or test split");

  double val_llm_acc = 0.0;
  for (const auto& ex : val_split) val_llm_acc += ex.llm_correct ? 1.0 : 0.0;
  val_llm_acc /= double(val_split.size());

  auto run_all = [&](const policy::ShepherdRunner& runner, auto&& one) {
    std::vector<Outcome> outcomes(test_split.size());
    parallel_for(test_split.size(), cfg.worker_threads, [&](std::size_t i) {
      if (cfg.trials == 1) {
        outcomes[i] = one(runner, test_split[i]);
        return;
      }
      std::vector<Outcome> trials;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto pc = runner.config();
        pc.completion_seed = t + 1;
        policy::ShepherdRunner seeded(slm, llm, &judge, pc);
        trials.push_back(one(seeded, test_split[i]));
      }
      outcomes[i] = metrics::majority_vote(trials);
    });
    return outcomes;
  };

  const policy::ShepherdRunner base_runner(slm, llm, &judge, cfg.policy);
  auto run_fixed = [&](auto decide) {
    return run_all(base_runner, [&](const policy::ShepherdRunner& r, const LabeledExample& ex) {
      return r.execute(ex.query, decide(ex));
    });
  };

  for (const auto& spec : specs) {
    StrategyRun run;
    run.spec = spec;
    if (spec.name == "oracle") {
      run.outcomes = run_fixed([](const LabeledExample& ex) { return policy::oracle_policy(ex); });
    } else if (spec.name == "llm_only") {
      run.outcomes = run_fixed([](const LabeledExample&) { return Decision::full_llm("static_llm_only"); });
    } else if (spec.name == "slm_only") {
      run.outcomes = run_fixed([](const LabeledExample&) { return Decision::slm_only("static_slm_only"); });
    } else if (spec.fraction) {
      const policy::StaticPolicy sp{policy::StaticKind::fixed_fraction, *spec.fraction};
      run.outcomes = run_fixed([&](const LabeledExample& ex) { return policy::static_decision(sp, ex.full_llm_len); });
    } else {
      const auto mode = spec.name == "reactive" ? predictor::FeatureMode::reactive : predictor::FeatureMode::proactive;
      auto fit = predictor::fit_model(train_split, val_split, mode, predictor::kDefaultEmbedder, cfg.train);
      std::vector<metrics::ValidationRecord> records;
      records.reserve(val_split.size());
      for (const auto& ex : val_split) {
        records.push_back(metrics::make_record(ex, *fit.model, cfg.policy, cfg.cost, judge));
      }
      const metrics::CalibrationConstraint constraint =
          cfg.constraint.value_or(metrics::CalibrationConstraint{metrics::CalibrationMode::accuracy_floor, 0.0,
                                                                 cfg.floor_ratio * val_llm_acc});
      run.calibration = metrics::calibrate(records, cfg.cost, cfg.policy, constraint,
                                           metrics::CalibrationGrid::standard(cfg.policy.n_max));
      if (!run.calibration->feasible) {
        spdlog::warn("{}: calibration constraint infeasible on validation, using the closest frontier point",
                     spec.name);
      }
      auto pc = cfg.policy;
      pc.alpha = run.calibration->best.alpha;
      pc.eta_hint = run.calibration->best.eta;
      const policy::ShepherdRunner runner(slm, llm, &judge, pc);
      const predictor::Predictor& model = *fit.model;
      run.outcomes = run_all(runner, [&](const policy::ShepherdRunner& r, const LabeledExample& ex) {
        return mode == predictor::FeatureMode::reactive ? r.run_reactive(ex.query, model)
                                                        : r.run_proactive(ex.query, model);
      });
    }
    run.summary = metrics::summarize(run.outcomes);
    for (const auto& o : run.outcomes) {
      ++run.decisions[o.consensus_hit ? std::string("consensus") : std::string(policy::to_string(o.decision.kind))];
    }
    rep.runs.push_back(std::move(run));
  }

  auto baseline_of = [&](const char* name, Decision d) {
    for (const auto& r : rep.runs) {
      if (r.spec.name == name) return r.summary;
    }
    std::vector<Outcome> outs;
    for (const auto& ex : test_split) outs.push_back(base_runner.execute(ex.query, d));
    return metrics::summarize(outs);
  };
  const auto slm_sum = baseline_of("slm_only", Decision::slm_only("static_slm_only"));
  const auto llm_sum = baseline_of("llm_only", Decision::full_llm("static_llm_only"));
  rep.baselines = {100.0 * slm_sum.accuracy(), 100.0 * llm_sum.accuracy(),
                   llm_sum.total.dollars() / double(llm_sum.count)};

  std::vector<metrics::StrategyResult> results;
  for (const auto& r : rep.runs) {
    results.push_back({r.spec.name, r.summary.total.dollars() / double(r.summary.count), 100.0 * r.summary.accuracy()});
  }
  if (rep.baselines.llm_cost > 0.0) rep.rows = metrics::evaluate(results, rep.baselines);
  return rep;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) {
    nlohmann::json j{{"strategy", run.spec.name},
                     {"count", run.summary.count},
                     {"correct", run.summary.correct},
                     {"total_cost", run.summary.total.to_string()},
                     {"decisions", run.decisions}};
    if (run.calibration) j["calibration"] = metrics::to_json(*run.calibration);
    runs.push_back(std::move(j));
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back(metrics::to_json(row));
  return {{"scripted", labeling::to_json(r.scripted)},
          {"labeled", labeling::to_json(r.labeled)},
          {"skipped", r.skipped},
          {"dropped", r.dropped},
          {"splits", {{"train", r.train_size}, {"val", r.val_size}, {"test", r.test_size}}},
          {"dominance",
           {{"checked", r.dominance.checked},
            {"equalities", r.dominance.equalities},
            {"violations", r.dominance.violations.size()},
            {"savings", r.dominance.savings.to_string()}}},
          {"baselines",
           {{"slm_accuracy", r.baselines.slm_accuracy},
            {"llm_accuracy", r.baselines.llm_accuracy},
            {"llm_cost", r.baselines.llm_cost}}},
          {"runs", std::move(runs)},
          {"rows", std::move(rows)}};
}

}  // namespace shepherd::simulator
