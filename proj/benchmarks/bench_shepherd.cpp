#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "shepherd/core/judge.hpp"
#include "shepherd/core/tokens.hpp"
#include "shepherd/labeling/labeling.hpp"
#include "shepherd/policy/decision.hpp"
#include "shepherd/predictor/predictor.hpp"
#include "shepherd/simulator/trace.hpp"

using namespace shepherd;

namespace {

const std::string kText =
    "Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. "
    "How many clips did Natalia sell altogether in April and May?";

void BM_Tokenize(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(kText));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(kText.size()));
}
BENCHMARK(BM_Tokenize);

void BM_MapToDecision(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<predictor::Prediction> preds(1024);
  for (auto& p : preds) p = predictor::make_prediction(8 * (u(rng) - 0.5), 7 * u(rng));
  policy::PolicyConfig cfg;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(policy::map_to_decision(preds[i++ & 1023], cfg));
}
BENCHMARK(BM_MapToDecision);

void BM_Embed(benchmark::State& state) {
  const predictor::HashedNgramEmbedder e(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(e.embed(kText));
}
BENCHMARK(BM_Embed)->Arg(64)->Arg(256);

void BM_Forward(benchmark::State& state) {
  const predictor::ModelShape shape{3, 256, 16, 32};
  const auto params = predictor::ModelParams::random(shape, 1);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd emb = Eigen::VectorXd::Constant(256, 0.0625);
  predictor::Rng rng(2);
  const auto passes = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        predictor::forward(params, f, emb, predictor::ForwardMode::eval_multisample, 0.2, passes, &rng));
  }
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(8);

void BM_LabelQuery(benchmark::State& state) {
  const auto trace = simulator::generate_trace(labeling::cnk12_profile(), 256, 3);
  auto m = fixtures::mocks_for(trace);
  const ExactMatchJudge judge;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(labeling::label_query(trace[i++ % trace.size()].query, *m.slm, *m.llm, judge, {}));
  }
}
BENCHMARK(BM_LabelQuery);

}  // namespace

BENCHMARK_MAIN();
