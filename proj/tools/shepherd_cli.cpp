#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "shepherd/backends/backend.hpp"
#include "shepherd/core/errors.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/gateway/config.hpp"
#include "shepherd/gateway/gateway.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/labeling/profile.hpp"
#include "shepherd/metrics/calibration.hpp"
#include "shepherd/metrics/cost.hpp"
#include "shepherd/metrics/report.hpp"
#include "shepherd/predictor/predictor.hpp"
#include "shepherd/simulator/experiment.hpp"

namespace {

using json = nlohmann::json;
using namespace shepherd;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

backends::BackendSpec read_spec(const std::string& path, backends::Role role) {
  auto j = read_json(path);
  j["role"] = role == backends::Role::slm ? "slm" : "llm";
  return j.get<backends::BackendSpec>();
}

// One JSON object per line: {"id", "text", "ground_truth"?, "task_kind"?}.
std::vector<Query> read_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<Query> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      std::optional<std::string> gt;
      if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
        gt = j.at("ground_truth").is_string() ? j.at("ground_truth").get<std::string>() : j.at("ground_truth").dump();
      }
      out.push_back(Query::make(j.value("id", "q" + std::to_string(lineno)), j.at("text").get<std::string>(),
                                parse_task_kind(j.value("task_kind", std::string("math_numeric"))), gt));
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

CostModel pricing(double llm_in, double llm_out, double slm_in, double slm_out) {
  auto cm = CostModel::per_million(llm_in, llm_out, slm_in, slm_out);
  cm.validate();
  return cm;
}

struct PriceFlags {
  double llm_in = 0.59;
  double llm_out = 0.79;
  double slm_in = 0.0;
  double slm_out = 0.0;

  void add(CLI::App* app) {
    app->add_option("--llm-price-in", llm_in, "LLM $ per 1M input tokens")->capture_default_str();
    app->add_option("--llm-price-out", llm_out, "LLM $ per 1M output tokens")->capture_default_str();
    app->add_option("--slm-price-in", slm_in, "SLM $ per 1M input tokens")->capture_default_str();
    app->add_option("--slm-price-out", slm_out, "SLM $ per 1M output tokens")->capture_default_str();
  }
  CostModel model() const { return pricing(llm_in, llm_out, slm_in, slm_out); }
};

std::pair<std::vector<labeling::LabeledExample>, std::vector<labeling::LabeledExample>> split(
    std::vector<labeling::LabeledExample> data, double val_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5b1175ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * double(data.size())));
  std::vector<labeling::LabeledExample> train, val;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : train).push_back(std::move(data[order[i]]));
  return {std::move(train), std::move(val)};
}

metrics::CalibrationConstraint constraint_from(const std::string& mode, std::optional<double> budget,
                                               std::optional<double> floor) {
  if (mode == "budget") {
    if (!budget) throw ConfigError("budget mode needs --budget");
    return {metrics::CalibrationMode::budget, *budget, 0.0};
  }
  if (mode == "accuracy-floor") {
    if (!floor) throw ConfigError("accuracy-floor mode needs --floor");
    return {metrics::CalibrationMode::accuracy_floor, 0.0, *floor};
  }
  throw ConfigError("calibration mode must be budget or accuracy-floor");
}

std::vector<metrics::ValidationRecord> records_for(const std::vector<labeling::LabeledExample>& data,
                                                   const predictor::ShepherdModel& model,
                                                   const policy::PolicyConfig& pc, const CostModel& cm) {
  const ExactMatchJudge judge;
  std::vector<metrics::ValidationRecord> recs;
  recs.reserve(data.size());
  for (const auto& ex : data) recs.push_back(metrics::make_record(ex, model, pc, cm, judge));
  return recs;
}

std::string paper_table_report(const std::string& path) {
  const auto t = metrics::read_paper_table(path);
  std::vector<metrics::StrategyResult> results;
  for (const auto& r : t.rows) results.push_back({r.strategy, r.cost, r.accuracy});
  const auto rows = metrics::evaluate(results, t.baselines);
  std::ostringstream os;
  os << "strategy,cost,accuracy,cost_reduction_pct,printed_cost_reduction,ace,printed_ace,ace_diff\n";
  os << std::setprecision(6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& p = t.rows[i];
    os << r.strategy << ',' << r.cost << ',' << r.accuracy << ',' << r.cost_reduction_pct << ','
       << p.printed_cost_reduction << ',';
    if (r.ace) {
      os << *r.ace << ',' << p.printed_ace << ',' << (*r.ace - p.printed_ace);
    } else {
      os << ',' << p.printed_ace << ',';
    }
    os << '\n';
  }
  return os.str();
}

void emit_trace(const std::string& dir, const simulator::ExperimentConfig& sc) {
  std::filesystem::create_directories(dir);
  auto opts = sc.trace;
  opts.samples = sc.policy.K;
  const auto trace = simulator::generate_trace(sc.profile, sc.queries, sc.seed, opts);
  const auto scripts = simulator::build_mock_scripts(trace);
  std::ofstream q(dir + "/queries.jsonl");
  for (const auto& sq : trace) {
    q << json{{"id", sq.query.id}, {"text", sq.query.text()}, {"ground_truth", *sq.query.ground_truth}}.dump() << '\n';
  }
  scripts.slm.save(dir + "/slm_script.json");
  scripts.llm.save(dir + "/llm_script.json");
  auto spec = [&](const char* name, Money in, Money out) {
    backends::BackendSpec b;
    b.model_name = name;
    b.role = std::string_view(name) == "llm" ? backends::Role::llm : backends::Role::slm;
    b.price_in = in;
    b.price_out = out;
    b.max_output_tokens = sc.policy.n_max;
    b.mock_script = std::filesystem::absolute(dir + "/" + name + "_script.json").string();
    return json(b);
  };
  write_text(dir + "/slm.json", spec("slm", sc.cost.slm_in, sc.cost.slm_out).dump(2) + "\n");
  write_text(dir + "/llm.json", spec("llm", sc.cost.llm_in, sc.cost.llm_out).dump(2) + "\n");
}

void print_error(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shepherd: SLM/LLM hint routing toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  // label
  auto* label = app.add_subcommand("label", "Label queries with n* by hint-budget search");
  std::string l_queries, l_slm, l_llm, l_out, l_stats;
  int l_step = 10, l_outliers = labeling::kDefaultOutlierThreshold;
  std::size_t l_samples = 0, l_threads = 1;
  bool l_no_filter = false;
  label->add_option("--queries", l_queries, "queries JSONL")->required();
  label->add_option("--slm", l_slm, "SLM backend spec JSON")->required();
  label->add_option("--llm", l_llm, "LLM backend spec JSON")->required();
  label->add_option("--out", l_out, "labels JSONL")->required();
  label->add_option("--step", l_step, "grid step in percent (5, 10, 20, 25)")->capture_default_str();
  label->add_option("--samples", l_samples, "reactive SLM samples to store per query")->capture_default_str();
  label->add_option("--threads", l_threads, "worker threads")->capture_default_str();
  label->add_option("--outlier-threshold", l_outliers, "drop queries with this many outliers")->capture_default_str();
  label->add_flag("--no-filter", l_no_filter, "keep every labeled query");
  label->add_option("--stats", l_stats, "write dataset statistics JSON here");

  // train
  auto* train = app.add_subcommand("train", "Train the two-stage predictor");
  std::string t_labels, t_val, t_out, t_mode = "proactive", t_config, t_embedder = predictor::kDefaultEmbedder;
  double t_val_fraction = 0.2;
  predictor::TrainConfig tc;
  train->add_option("--labels", t_labels, "training labels JSONL")->required();
  train->add_option("--val", t_val, "validation labels JSONL (default: split from --labels)");
  train->add_option("--val-fraction", t_val_fraction, "held-out share when --val is absent")->capture_default_str();
  train->add_option("--mode", t_mode, "proactive|reactive")->capture_default_str();
  train->add_option("--out", t_out, "model artifact JSON")->required();
  train->add_option("--config", t_config, "training hyperparameters JSON");
  train->add_option("--embedder", t_embedder, "embedding provider id")->capture_default_str();
  train->add_option("--seed", tc.seed, "random seed")->capture_default_str();
  train->add_option("--epochs", tc.epochs, "epochs")->capture_default_str();
  train->add_option("--lambda", tc.lambda, "size-loss weight")->capture_default_str();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Pick (alpha, eta_hint) on validation labels");
  std::string c_labels, c_model, c_policy_in, c_out, c_mode = "accuracy-floor", c_frontier;
  std::optional<double> c_budget, c_floor;
  PriceFlags c_prices;
  calibrate->add_option("--labels", c_labels, "validation labels JSONL")->required();
  calibrate->add_option("--model", c_model, "model artifact JSON")->required();
  calibrate->add_option("--policy", c_policy_in, "base policy config JSON");
  calibrate->add_option("--mode", c_mode, "budget|accuracy-floor")->capture_default_str();
  calibrate->add_option("--budget", c_budget, "max mean $ per query (budget mode)");
  calibrate->add_option("--floor", c_floor, "min accuracy in [0, 1] (accuracy-floor mode)");
  calibrate->add_option("--out", c_out, "calibrated policy config JSON")->required();
  calibrate->add_option("--frontier", c_frontier, "write the grid result and frontier JSON here");
  c_prices.add(calibrate);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a policy offline, or recompute a published table");
  std::string e_table, e_labels, e_model, e_policy, e_out;
  PriceFlags e_prices;
  evaluate->add_option("--from-paper-table", e_table, "CSV with LLM/SLM baselines and strategy rows");
  evaluate->add_option("--labels", e_labels, "test labels JSONL");
  evaluate->add_option("--model", e_model, "model artifact JSON");
  evaluate->add_option("--policy", e_policy, "policy config JSON");
  evaluate->add_option("--out", e_out, "report CSV (default stdout)");
  e_prices.add(evaluate);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "End-to-end run over a synthetic trace and scripted mocks");
  simulator::ExperimentConfig sc;
  std::string s_profile = "gsm8k", s_strategies = "oracle,proactive,reactive,llm_only,slm_only", s_out = "report.csv",
              s_json;
  std::optional<double> s_budget, s_floor;
  PriceFlags s_prices;
  simulate->add_option("--profile", s_profile, "gsm8k, cnk12, or a profile JSON path")->capture_default_str();
  simulate->add_option("-n,--queries", sc.queries, "trace size")->capture_default_str();
  simulate->add_option("--seed", sc.seed, "seed")->capture_default_str();
  simulate->add_option("--strategies", s_strategies, "comma-separated strategies")->capture_default_str();
  simulate->add_option("--trials", sc.trials, "majority-vote runs per query")->capture_default_str();
  simulate->add_option("--threads", sc.worker_threads, "worker threads")->capture_default_str();
  simulate->add_option("--epochs", sc.train.epochs, "predictor epochs")->capture_default_str();
  simulate->add_option("--budget", s_budget, "calibrate with a mean $ budget instead of the accuracy floor");
  simulate->add_option("--floor", s_floor, "calibration accuracy floor in [0, 1]");
  simulate->add_option("--off-grid", sc.trace.off_grid, "draw n* off the 10% grid");
  simulate->add_option("--out", s_out, "report CSV")->capture_default_str();
  simulate->add_option("--json", s_json, "full report JSON");
  std::string s_emit;
  simulate->add_option("--emit", s_emit,
                       "only write queries.jsonl, mock scripts and backend specs for the trace into this directory");
  s_prices.add(simulate);

  // stats
  auto* stats = app.add_subcommand("stats", "n* distribution of labels or of a synthetic trace");
  std::string st_labels, st_profile;
  std::size_t st_n = 10000;
  std::uint64_t st_seed = 0;
  stats->add_option("--labels", st_labels, "labels JSONL");
  stats->add_option("--profile", st_profile, "profile name or JSON path (synthetic trace)");
  stats->add_option("-n,--queries", st_n, "synthetic trace size")->capture_default_str();
  stats->add_option("--seed", st_seed, "seed")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the OpenAI-compatible shepherding gateway");
  std::string g_config;
  serve->add_option("--config", g_config, "gateway config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (*label) {
      const auto queries = read_queries(l_queries);
      auto slm = backends::make_backend(read_spec(l_slm, backends::Role::slm));
      auto llm = backends::make_backend(read_spec(l_llm, backends::Role::llm));
      labeling::LabelConfig lc;
      lc.step_pct = l_step;
      lc.reactive_samples = l_samples;
      lc.worker_threads = l_threads;
      const ExactMatchJudge judge;
      auto run = labeling::label_dataset(queries, *slm, *llm, judge, lc);
      std::vector<labeling::Skipped> skipped = run.skipped;
      auto kept = std::move(run.examples);
      if (!l_no_filter) {
        auto f = labeling::filter_dataset(std::move(kept), l_outliers);
        kept = std::move(f.kept);
        skipped.insert(skipped.end(), f.dropped.begin(), f.dropped.end());
      }
      labeling::write_labels(l_out, kept);
      json summary{{"labeled", kept.size()}, {"skipped", skipped.size()}, {"cost_usd", run.usage.total().to_string()}};
      if (!kept.empty()) summary["stats"] = labeling::to_json(labeling::dataset_stats(kept));
      if (!l_stats.empty()) write_text(l_stats, summary.dump(2) + "\n");
      std::cout << summary.dump() << '\n';
    } else if (*train) {
      if (!t_config.empty()) {
        const auto seed = tc.seed;
        tc = read_json(t_config).get<predictor::TrainConfig>();
        if (train->count("--seed") > 0) tc.seed = seed;
      }
      auto labels = labeling::read_labels(t_labels);
      std::vector<labeling::LabeledExample> tr, va;
      if (t_val.empty()) {
        std::tie(tr, va) = split(std::move(labels), t_val_fraction, tc.seed);
      } else {
        tr = std::move(labels);
        va = labeling::read_labels(t_val);
      }
      if (tr.empty() || va.empty()) throw ConfigError("training and validation splits must be non-empty");
      const auto fit = predictor::fit_model(tr, va, predictor::parse_feature_mode(t_mode), t_embedder, tc);
      fit.model->save(t_out);
      std::cout << json{{"model", t_out},
                        {"best_epoch", fit.training.best_epoch},
                        {"train", tr.size()},
                        {"val", va.size()},
                        {"fingerprint", fit.model->fingerprint()}}
                       .dump()
                << '\n';
    } else if (*calibrate) {
      const auto model = predictor::ShepherdModel::load(c_model);
      policy::PolicyConfig pc;
      if (!c_policy_in.empty()) pc = read_json(c_policy_in).get<policy::PolicyConfig>();
      const auto cm = c_prices.model();
      const auto recs = records_for(labeling::read_labels(c_labels), model, pc, cm);
      const auto result = metrics::calibrate(recs, cm, pc, constraint_from(c_mode, c_budget, c_floor),
                                             metrics::CalibrationGrid::standard(pc.n_max));
      pc.alpha = result.best.alpha;
      pc.eta_hint = result.best.eta;
      write_text(c_out, json(pc).dump(2) + "\n");
      if (!c_frontier.empty()) write_text(c_frontier, metrics::to_json(result).dump(2) + "\n");
      std::cout << json{{"feasible", result.feasible}, {"best", metrics::to_json(result.best)}}.dump() << '\n';
      if (!result.feasible) {
        print_error("infeasible", "constraint cannot be met on validation; wrote the closest frontier point");
        return 3;
      }
    } else if (*evaluate) {
      if (!e_table.empty()) {
        write_text(e_out, paper_table_report(e_table));
      } else {
        if (e_labels.empty() || e_model.empty() || e_policy.empty()) {
          throw ConfigError("evaluate needs --from-paper-table or all of --labels, --model, --policy");
        }
        const auto model = predictor::ShepherdModel::load(e_model);
        const auto pc = read_json(e_policy).get<policy::PolicyConfig>();
        const auto cm = e_prices.model();
        const auto data = labeling::read_labels(e_labels);
        if (data.empty()) throw ConfigError("no labels in " + e_labels);
        const auto recs = records_for(data, model, pc, cm);
        std::vector<metrics::StrategyResult> results;
        auto add = [&](const std::string& name, auto decide) {
          std::size_t correct = 0;
          Money cost;
          for (std::size_t i = 0; i < recs.size(); ++i) {
            const auto o = metrics::score(recs[i], decide(i), cm);
            correct += o.correct ? 1 : 0;
            cost += o.cost;
          }
          results.push_back({name, cost.dollars() / double(recs.size()), 100.0 * double(correct) / double(recs.size())});
        };
        add("policy", [&](std::size_t i) { return policy::map_to_decision(recs[i].prediction, pc); });
        add("oracle", [&](std::size_t i) { return policy::oracle_policy(data[i]); });
        add("llm_only", [](std::size_t) { return policy::Decision::full_llm("static_llm_only"); });
        add("slm_only", [](std::size_t) { return policy::Decision::slm_only("static_slm_only"); });
        // Baselines exclude reactive sample costs and consensus.
        std::size_t llm_ok = 0, slm_ok = 0;
        Money llm_cost;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const auto plain = metrics::make_record(data[i], recs[i].prediction);
          const auto l = metrics::score(plain, policy::Decision::full_llm(""), cm);
          llm_ok += l.correct ? 1 : 0;
          llm_cost += l.cost;
          slm_ok += metrics::score(plain, policy::Decision::slm_only(""), cm).correct ? 1 : 0;
        }
        const double n = double(data.size());
        const metrics::Baselines b{100.0 * double(slm_ok) / n, 100.0 * double(llm_ok) / n, llm_cost.dollars() / n};
        write_text(e_out, metrics::to_csv(metrics::evaluate(results, b)));
      }
    } else if (*simulate) {
      sc.profile = labeling::load_profile(s_profile);
      sc.strategies.clear();
      std::stringstream ss(s_strategies);
      for (std::string s; std::getline(ss, s, ',');) {
        if (!s.empty()) sc.strategies.push_back(s);
      }
      sc.cost = s_prices.model();
      if (!s_emit.empty()) {
        emit_trace(s_emit, sc);
        return 0;
      }
      if (s_budget) {
        sc.constraint = metrics::CalibrationConstraint{metrics::CalibrationMode::budget, *s_budget, 0.0};
      } else if (s_floor) {
        sc.constraint = metrics::CalibrationConstraint{metrics::CalibrationMode::accuracy_floor, 0.0, *s_floor};
      }
      const auto rep = simulator::run_experiment(sc);
      write_text(s_out, metrics::to_csv(rep.rows));
      if (!s_json.empty()) write_text(s_json, simulator::to_json(rep).dump(2) + "\n");
      std::cerr << metrics::to_text_table(rep.rows, sc.profile.name);
      std::cout << json{{"report", s_out},
                        {"test_queries", rep.test_size},
                        {"dominance_checked", rep.dominance.checked},
                        {"dominance_violations", rep.dominance.violations.size()}}
                       .dump()
                << '\n';
      if (!rep.dominance.ok()) {
        print_error("dominance", "shepherding cost exceeded routing cost on some queries");
        return 4;
      }
    } else if (*stats) {
      if (!st_labels.empty()) {
        const auto data = labeling::read_labels(st_labels);
        std::cout << labeling::to_json(labeling::dataset_stats(data)).dump(2) << '\n';
      } else if (!st_profile.empty()) {
        const auto trace = simulator::generate_trace(labeling::load_profile(st_profile), st_n, st_seed);
        std::cout << labeling::to_json(simulator::trace_stats(trace)).dump(2) << '\n';
      } else {
        throw ConfigError("stats needs --labels or --profile");
      }
    } else if (*serve) {
      const auto cfg = gateway::load_gateway_config(g_config);
      auto gw = gateway::Gateway::from_config(cfg);
      if (!gw->serve(cfg.host, cfg.port, cfg.threads)) throw ConfigError("cannot listen on " + cfg.host);
    }
  } catch (const SchemaError& e) {
    print_error("schema", e.what());
    return 1;
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 1;
  } catch (const TransportError& e) {
    print_error("transport", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
