// Acceptance suite. Usage: shepherd_acceptance [--criterion N]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/gateway/gateway.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/metrics/calibration.hpp"
#include "shepherd/metrics/cost.hpp"
#include "shepherd/metrics/report.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/predictor/predictor.hpp"
#include "shepherd/simulator/trace.hpp"

using namespace shepherd;

namespace {

// Tolerances.
constexpr double kAceTol = 0.02;
constexpr double kCostRedTolPp = 2.0;
constexpr std::size_t kDominanceMin = 10'000;
constexpr std::size_t kLabelQueries = 1000;
constexpr double kGradTol = 1e-4;
constexpr double kFdStep = 1e-4;
constexpr int kGradShapes = 50;
constexpr double kClassifierAcc = 0.95;
constexpr std::size_t kTraceSize = 50'000;
constexpr double kTraceTol = 0.01;
constexpr int kPredictionSets = 1000;
constexpr int kBudgets = 10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::vector<metrics::PaperTable> tables() {
  std::vector<metrics::PaperTable> out;
  for (const char* name : {"gsm8k", "cnk12", "humaneval", "mbpp"}) {
    out.push_back(metrics::read_paper_table(std::string(SHEPHERD_SOURCE_DIR) + "/tables/" + name + ".csv"));
  }
  return out;
}

Verdict ace_arithmetic() {
  std::size_t rows = 0, bad = 0;
  double worst = 0.0;
  std::ostringstream misses;
  for (const auto& t : tables()) {
    for (const auto& r : t.rows) {
      ++rows;
      const double got = metrics::ace({r.accuracy, r.cost, t.baselines.slm_accuracy, t.baselines.llm_accuracy,
                                       t.baselines.llm_cost});
      const double err = std::abs(got - r.printed_ace);
      worst = std::max(worst, err);
      if (err > kAceTol) {
        ++bad;
        misses << ' ' << t.name << '/' << r.strategy << fmt("(%.3f vs %.2f)", got, r.printed_ace);
      }
    }
  }
  return {bad == 0, std::to_string(rows - bad) + "/" + std::to_string(rows) + " rows within ±0.02, max |err| " +
                        fmt("%.4f", worst) + (bad ? ";" + misses.str() : "")};
}

Verdict cost_reduction_arithmetic() {
  std::size_t rows = 0, bad = 0;
  double worst = 0.0;
  for (const auto& t : tables()) {
    for (const auto& r : t.rows) {
      ++rows;
      const double err = std::abs(metrics::cost_reduction(r.cost, t.baselines.llm_cost) - r.printed_cost_reduction);
      worst = std::max(worst, err);
      bad += err > kCostRedTolPp ? 1 : 0;
    }
  }
  return {bad == 0, std::to_string(rows - bad) + "/" + std::to_string(rows) + " rows within ±2 pp, max |err| " +
                        fmt("%.3f pp", worst)};
}

Verdict oracle_dominance() {
  std::vector<metrics::OracleCostInputs> all;
  std::size_t boundary = 0;
  std::uint64_t seed = 101;
  for (const auto& p : {labeling::gsm8k_profile(), labeling::cnk12_profile()}) {
    simulator::TraceOptions opt;
    opt.off_grid = true;
    opt.failure_window_prob = 0.2;
    const auto trace = simulator::generate_trace(p, kDominanceMin / 2 + 500, seed++, opt);
    std::mt19937_64 rng(seed);
    for (const auto& sq : trace) {
      metrics::OracleCostInputs in;
      in.q_len = sq.query.prompt.size();
      in.full_len = sq.llm_len;
      in.n_star = simulator::brute_force_n_star(sq);
      in.slm_out_len = sq.slm_out_len;
      in.shep_slm_out_len = sq.slm_out_len / 2 + rng() % (sq.slm_out_len + 1);
      boundary += (in.n_star == 0 || in.n_star == in.full_len) ? 1 : 0;
      all.push_back(in);
    }
  }
  const auto rep = metrics::dominance_check(all, hosted_llama70b_pricing());
  const bool ok = rep.checked >= kDominanceMin && rep.ok() && rep.equalities == boundary;
  return {ok, std::to_string(rep.checked) + " examples, " + std::to_string(rep.violations.size()) +
                  " violations, equalities " + std::to_string(rep.equalities) + " vs boundary " +
                  std::to_string(boundary)};
}

Verdict labeling_equivalence() {
  simulator::TraceOptions opt;
  opt.failure_window_prob = 0.5;
  auto trace = simulator::generate_trace(labeling::cnk12_profile(), kLabelQueries / 2, 7, opt);
  opt.off_grid = true;
  const auto off = simulator::generate_trace(labeling::gsm8k_profile(), kLabelQueries / 2, 8, opt);
  // Off-grid ids collide with the first batch; re-key them.
  for (auto sq : off) {
    sq.query = Query::make("off-" + sq.query.id, "zz " + sq.query.text(), sq.query.task_kind, *sq.query.ground_truth);
    trace.push_back(std::move(sq));
  }
  auto m = fixtures::mocks_for(trace);
  const ExactMatchJudge judge;
  std::size_t agree = 0, windows = 0, nonmonotone = 0;
  for (const auto& sq : trace) {
    const auto ex = labeling::label_query(sq.query, *m.slm, *m.llm, judge, {});
    agree += ex.n_star == simulator::brute_force_n_star(sq) ? 1 : 0;
    windows += sq.window ? 1 : 0;
    for (std::size_t i = 0; i + 1 < ex.per_budget_correct.size(); ++i) {
      if (ex.per_budget_correct[i] && !ex.per_budget_correct[i + 1]) {
        ++nonmonotone;
        break;
      }
    }
  }
  return {agree == trace.size(), std::to_string(agree) + "/" + std::to_string(trace.size()) + " agree (" +
                                     std::to_string(windows) + " with failure windows, " +
                                     std::to_string(nonmonotone) + " non-monotone)"};
}

Verdict gradient_check() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int checks = 0;
  for (int s = 0; s < kGradShapes; ++s) {
    const predictor::ModelShape shape{1 + rng() % 3, 2 + rng() % 6, 1 + rng() % 4, 1 + rng() % 5};
    std::normal_distribution<double> g;
    std::vector<predictor::TrainingExample> batch(2 + rng() % 5);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto& ex = batch[i];
      ex.features = Eigen::VectorXd::NullaryExpr(Eigen::Index(shape.features), [&] { return g(rng); });
      ex.embedding = Eigen::VectorXd::NullaryExpr(Eigen::Index(shape.embed_dim), [&] { return g(rng); });
      ex.y = i % 2 == 0 || rng() % 2;
      ex.r = ex.y ? 4.0 * predictor::uniform01(rng) : 0.0;
    }
    auto params = predictor::ModelParams::random(shape, rng());
    for (Eigen::Index i = 0; i < params.theta.size(); ++i) params.theta[i] += 0.1 * g(rng);
    for (double lambda : {0.0, 0.5, 1.0}) {
      const predictor::LossConfig cfg{lambda, 1.0, s % 2 ? 0.25 : 0.0};
      const std::uint64_t mask_seed = rng();
      const auto analytic = predictor::loss_total(params, batch, cfg, mask_seed).grad;
      Eigen::VectorXd numeric(params.theta.size());
      for (Eigen::Index i = 0; i < params.theta.size(); ++i) {
        auto plus = params, minus = params;
        plus.theta[i] += kFdStep;
        minus.theta[i] -= kFdStep;
        numeric[i] = (predictor::loss_total(plus, batch, cfg, mask_seed).loss -
                      predictor::loss_total(minus, batch, cfg, mask_seed).loss) /
                     (2 * kFdStep);
      }
      const double denom = std::max(numeric.norm() + analytic.norm(), 1e-12);
      worst = std::max(worst, (numeric - analytic).norm() / denom);
      ++checks;
    }
  }
  return {worst <= kGradTol, std::to_string(checks) + " checks over " + std::to_string(kGradShapes) +
                                 " shapes, max relative error " + fmt("%.2e", worst)};
}

labeling::LabeledExample synthetic(std::size_t i, std::size_t words, bool hint, std::size_t n_star) {
  static const char* kFill[] = {"apple", "river", "stone", "cloud", "lamp", "chair", "wheel", "bread", "field"};
  std::string text = hint ? "prove" : "count";
  for (std::size_t w = 0; w < words; ++w) text += std::string(" ") + kFill[(i + w) % 9];
  labeling::LabeledExample ex;
  ex.query = Query::make("s" + std::to_string(i), text, TaskKind::math_numeric, "1");
  ex.full_llm_len = 200;
  ex.n_star = hint ? n_star : 0;
  ex.y = hint;
  ex.r = std::log1p(double(ex.n_star));
  ex.llm_correct = true;
  return ex;
}

Verdict training_sanity() {
  // Hint label separable by query length; size a noiseless function of it.
  std::vector<labeling::LabeledExample> train, val;
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < 1000; ++i) {
    const bool hint = rng() % 2;
    const std::size_t words = hint ? 12 + rng() % 9 : 1 + rng() % 8;
    const std::size_t n_star = hint ? 20 * (words - 11) : 0;
    (i < 800 ? train : val).push_back(synthetic(i, words, hint, n_star));
  }
  predictor::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 1;
  const auto fit = predictor::fit_model(train, val, predictor::FeatureMode::proactive, "hashed-ngram-64", cfg);
  std::size_t right = 0;
  std::vector<double> errs;
  for (const auto& ex : val) {
    const auto p = fit.model->predict(ex.query);
    right += (p.hint_prob >= 0.5) == ex.y ? 1 : 0;
    if (ex.y) {
      errs.push_back(std::abs(double(policy::hint_budget(p.size_log, 2048)) - double(ex.n_star)));
    }
  }
  std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
  const double median = errs[errs.size() / 2];
  const double step = 0.1 * 200;
  const double acc = double(right) / double(val.size());
  return {acc >= kClassifierAcc && median <= step,
          fmt("validation accuracy %.3f (>= 0.95), median |n_hat - n*| %.1f tokens (grid step %.0f)", acc, median, step)};
}

Verdict trace_fidelity() {
  std::ostringstream os;
  bool ok = true;
  std::uint64_t seed = 1;
  for (const auto& p : {labeling::gsm8k_profile(), labeling::cnk12_profile()}) {
    const auto s = simulator::trace_stats(simulator::generate_trace(p, kTraceSize, seed++));
    double worst = std::max(std::abs(s.p_zero - p.p_zero), std::abs(s.p_unsolvable - p.p_unsolvable));
    for (std::size_t b = 0; b < 9; ++b) worst = std::max(worst, std::abs(s.bucket_masses[b] - p.bucket_masses[b]));
    ok = ok && worst <= kTraceTol;
    os << p.name << fmt(": p_zero %.4f (%.3f), unsolvable %.4f (%.3f)", s.p_zero, p.p_zero, s.p_unsolvable,
                        p.p_unsolvable)
       << fmt(", max dev %.4f; ", worst);
  }
  return {ok, os.str()};
}

Verdict decision_contract() {
  const std::size_t n_max = kDefaultMaxOutputTokens;
  std::size_t round_trip_bad = 0;
  for (std::size_t n = 0; n <= n_max; ++n) round_trip_bad += policy::hint_budget(std::log1p(double(n)), n_max) != n;

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t monotone_bad = 0;
  for (int set = 0; set < kPredictionSets; ++set) {
    std::vector<predictor::Prediction> preds(1 + rng() % 50);
    for (auto& p : preds) p = predictor::make_prediction(8.0 * (u(rng) - 0.5), 8.0 * u(rng));
    policy::PolicyConfig cfg;
    cfg.eta_hint = 10 * (1 + rng() % 200);
    std::size_t prev_llm = preds.size() + 1;
    std::size_t prev_hint_tokens = std::numeric_limits<std::size_t>::max();
    for (int a = 0; a <= 100; ++a) {
      cfg.alpha = a / 100.0;
      std::size_t llm = 0, tokens = 0;
      for (const auto& p : preds) {
        const auto d = policy::map_to_decision(p, cfg);
        llm += d.kind != policy::DecisionKind::slm_only;
        tokens += d.hint_tokens;
      }
      if (llm > prev_llm || tokens > prev_hint_tokens) ++monotone_bad;
      prev_llm = llm;
      prev_hint_tokens = tokens;
    }
  }
  return {round_trip_bad == 0 && monotone_bad == 0,
          std::to_string(n_max + 1 - round_trip_bad) + "/" + std::to_string(n_max + 1) + " budgets round-trip; " +
              std::to_string(monotone_bad) + " alpha-monotonicity violations over " +
              std::to_string(kPredictionSets) + " sets"};
}

Verdict gateway_end_to_end() {
  const auto trace = simulator::generate_trace(labeling::gsm8k_profile(), 300, 17);
  auto m = fixtures::mocks_for(trace);
  std::map<std::string, const simulator::SyntheticQuery*> by_text;
  for (const auto& sq : trace) by_text[sq.query.text()] = &sq;
  // Oracle-style stub: predicts the scripted minimum hint.
  auto model = std::make_shared<fixtures::FnPredictor>([&](const Query& q) -> predictor::Prediction {
    const auto& sq = *by_text.at(q.text());
    if (sq.unsolvable) return predictor::make_prediction(5.0, std::log1p(2048.0));
    const auto n = simulator::brute_force_n_star(sq);
    return predictor::make_prediction(n > 0 ? 5.0 : -5.0, std::log1p(double(n)));
  });
  policy::PolicyConfig pc;
  pc.eta_hint = 1024;
  gateway::Gateway gw(std::move(m.slm), std::move(m.llm), model, pc);

  std::map<std::string, std::size_t> expected;
  std::size_t hinted = 0, hinted_right = 0, bad_status = 0;
  Money header_sum;
  const ExactMatchJudge judge;
  for (const auto& sq : trace) {
    const auto n = simulator::brute_force_n_star(sq);
    ++expected[sq.unsolvable ? "full_llm" : n == 0 ? "slm_only" : "hint"];
    const nlohmann::json req{{"messages", {{{"role", "user"}, {"content", sq.query.text()}}}}};
    const auto resp = gw.handle_completion(req.dump());
    if (resp.status != 200) {
      ++bad_status;
      continue;
    }
    header_sum += Money::parse(resp.headers.at("x-shepherd-cost-usd"));
    if (resp.headers.at("x-shepherd-decision") == "hint") {
      ++hinted;
      const auto body = nlohmann::json::parse(resp.body);
      hinted_right += judge.satisfactory(sq.query, body["choices"][0]["message"]["content"].get<std::string>());
    }
  }
  const auto hist = gw.decision_histogram();
  const auto ledger = gw.ledger();
  const bool ok = bad_status == 0 && hist == expected && hinted > 0 && hinted_right == hinted &&
                  ledger.total() == header_sum && ledger.rederive_total() == header_sum;
  std::ostringstream os;
  os << trace.size() << " requests; histogram";
  for (const auto& [k, v] : hist) os << ' ' << k << '=' << v << "/" << expected[k];
  os << "; hinted correct " << hinted_right << '/' << hinted << "; ledger $" << ledger.total().to_string()
     << " vs headers $" << header_sum.to_string();
  return {ok, os.str()};
}

Verdict calibration_frontier() {
  const auto trace = simulator::generate_trace(labeling::cnk12_profile(), 400, 23);
  auto m = fixtures::mocks_for(trace);
  const ExactMatchJudge judge;
  const auto cm = hosted_llama70b_pricing();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::vector<metrics::ValidationRecord> recs;
  for (const auto& sq : trace) {
    const auto ex = labeling::label_query(sq.query, *m.slm, *m.llm, judge, {});
    const double logit = (ex.y ? 1.5 : -1.5) + 2.0 * noise(rng);
    recs.push_back(metrics::make_record(ex, predictor::make_prediction(logit, ex.r + noise(rng))));
  }
  policy::PolicyConfig base;
  base.n_max = 512;
  const auto grid = metrics::CalibrationGrid::standard(base.n_max);

  const auto all = metrics::sweep(recs, grid, cm, base);
  double lo = all.front().mean_cost(), hi = lo;
  for (const auto& p : all) {
    lo = std::min(lo, p.mean_cost());
    hi = std::max(hi, p.mean_cost());
  }
  std::vector<double> accs;
  bool monotone = true;
  for (int b = 0; b < kBudgets; ++b) {
    const double budget = lo + (hi - lo) * b / (kBudgets - 1);
    const auto r = metrics::calibrate(recs, cm, base, {metrics::CalibrationMode::budget, budget, 0.0}, grid);
    if (!r.feasible) monotone = false;
    if (!accs.empty() && r.best.accuracy() < accs.back()) monotone = false;
    accs.push_back(r.best.accuracy());
  }

  // Independent scan: map and score every record at every grid point.
  double llm_acc = 0;
  for (const auto& r : recs) llm_acc += r.llm_correct;
  llm_acc /= double(recs.size());
  const double floor = 0.95 * llm_acc;
  const auto picked = metrics::calibrate(recs, cm, base, {metrics::CalibrationMode::accuracy_floor, 0, floor}, grid);
  std::optional<Money> brute;
  for (double alpha : grid.alphas) {
    for (std::size_t eta : grid.etas) {
      auto pc = base;
      pc.alpha = alpha;
      pc.eta_hint = eta;
      std::size_t correct = 0;
      Money cost;
      for (const auto& r : recs) {
        const auto d = r.consensus_hit ? policy::Decision::slm_only("") : policy::map_to_decision(r.prediction, pc);
        const auto s = metrics::score(r, d, cm);
        correct += s.correct;
        cost += s.cost;
      }
      if (double(correct) / double(recs.size()) >= floor - 1e-12 && (!brute || cost < *brute)) brute = cost;
    }
  }
  const bool minimal = picked.feasible && brute && picked.best.total_cost == *brute;
  std::ostringstream os;
  os << "budget-mode accuracy";
  for (double a : accs) os << fmt(" %.3f", a);
  os << (monotone ? " (non-decreasing)" : " (NOT monotone)") << "; floor " << fmt("%.3f", floor) << " cost $"
     << picked.best.total_cost.to_string() << " vs brute force $" << (brute ? brute->to_string() : "none");
  return {monotone && minimal, os.str()};
}

const std::vector<std::pair<const char*, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Verdict()>>> c{
      {"ACE arithmetic", ace_arithmetic},
      {"cost-reduction arithmetic", cost_reduction_arithmetic},
      {"oracle dominance", oracle_dominance},
      {"labeling oracle equivalence", labeling_equivalence},
      {"gradient correctness", gradient_check},
      {"training sanity", training_sanity},
      {"heavy-tail generator fidelity", trace_fidelity},
      {"decision-mapping contract", decision_contract},
      {"end-to-end gateway", gateway_end_to_end},
      {"calibration frontier", calibration_frontier},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: " << argv[0] << " [--criterion N]\n";
      return 2;
    }
  }
  const auto& all = criteria();
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::cerr << "criterion must be 1.." << all.size() << '\n';
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = all[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << all[i].first << "): " << v.detail
              << fmt(" [%.2f s]", secs) << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
