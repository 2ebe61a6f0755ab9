#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "shepherd/core/errors.hpp"
#include "shepherd/predictor/predictor.hpp"

using namespace shepherd;
using namespace shepherd::predictor;

namespace {

std::vector<TrainingExample> random_batch(const ModelShape& shape, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<TrainingExample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].features = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(shape.features), [&] { return g(rng); });
    out[i].embedding = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(shape.embed_dim), [&] { return g(rng); });
    out[i].y = i % 2 == 0;
    out[i].r = out[i].y ? 1.0 + 3.0 * uniform01(rng) : 0.0;
  }
  return out;
}

labeling::LabeledExample example(const std::string& id, const std::string& text, std::size_t n_star) {
  labeling::LabeledExample ex;
  ex.query = Query::make(id, text, TaskKind::math_numeric, "1");
  ex.full_llm_len = 100;
  ex.n_star = n_star;
  ex.y = n_star > 0;
  ex.r = std::log1p(double(n_star));
  ex.llm_correct = true;
  return ex;
}

}  // namespace

TEST(Features, ProactiveUsesQueryLength) {
  const auto q = Query::make("a", "one two three", TaskKind::math_numeric);
  const auto f = extract_features(q, FeatureMode::proactive);
  EXPECT_DOUBLE_EQ(f.query_token_len, 3.0);
  EXPECT_EQ(f.values().size(), 1);
  EXPECT_THROW(extract_features(q, FeatureMode::reactive), ConfigError);
}

TEST(Features, ReactiveEntropyAndFallback) {
  const auto q = Query::make("a", "x y", TaskKind::math_numeric);
  std::vector<labeling::SlmSample> with{{"1", 10, 0.2}, {"1", 20, 0.4}};
  const auto f = extract_features(q, FeatureMode::reactive, with);
  EXPECT_DOUBLE_EQ(*f.avg_entropy, 0.3);
  EXPECT_DOUBLE_EQ(*f.avg_output_len, 15.0);
  EXPECT_EQ(f.values().size(), 3);
  std::vector<labeling::SlmSample> without{{"1", 4, std::nullopt}, {"2", 4, std::nullopt}, {"1", 4, std::nullopt}};
  EXPECT_NEAR(*extract_features(q, FeatureMode::reactive, without).avg_entropy, 1.0 / 3.0, 1e-12);
}

TEST(Standardizer, ZeroVarianceGetsUnitScale) {
  std::vector<Eigen::VectorXd> rows{Eigen::Vector2d(1, 5), Eigen::Vector2d(3, 5)};
  const auto s = Standardizer::fit(rows);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
  EXPECT_DOUBLE_EQ(s.stddev[1], 1.0);
  EXPECT_DOUBLE_EQ(s.apply(Eigen::Vector2d(3, 5))[0], 1.0);
  EXPECT_DOUBLE_EQ(s.apply(Eigen::Vector2d(3, 5))[1], 0.0);
  const auto back = nlohmann::json(s).get<Standardizer>();
  EXPECT_EQ(back.mean, s.mean);
}

TEST(Embedding, UnitNormAndDeterministic) {
  const HashedNgramEmbedder e(64);
  const auto a = e.embed("How many apples are left?");
  EXPECT_EQ(a.size(), 64);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_EQ(a, e.embed("How many apples are left?"));
  EXPECT_NE(a, e.embed("How many pears are left?"));
  EXPECT_EQ(e.embed("ab").norm(), 0.0);
}

TEST(Embedding, RegistryResolvesHashedIds) {
  auto p = EmbeddingRegistry::global().get("hashed-ngram-32");
  EXPECT_EQ(p->dim(), 32u);
  EXPECT_THROW(EmbeddingRegistry::global().get("bert-base"), ConfigError);
}

TEST(Model, SigmoidClampAndSoftplus) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_DOUBLE_EQ(make_prediction(1e6, 0).hint_prob, sigmoid(kLogitClamp));
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-9);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(huber(0.5, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(huber(3.0, 1.0), 2.5);
}

TEST(Model, ShapeMismatchRejected) {
  const ModelShape shape{2, 8, 4, 5};
  const auto p = ModelParams::random(shape, 1);
  EXPECT_EQ(p.theta.size(), static_cast<Eigen::Index>(shape.param_count()));
  EXPECT_THROW(forward(p, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(8), ForwardMode::eval_plain), ConfigError);
}

TEST(Model, AnalyticGradientMatchesFiniteDifference) {
  const ModelShape shape{2, 6, 3, 4};
  const auto batch = random_batch(shape, 6, 9);
  for (double lambda : {0.0, 0.5, 1.0}) {
    auto p = ModelParams::random(shape, 4);
    p.theta.array() += 0.05;
    const LossConfig cfg{lambda, 1.0, 0.3};
    const auto res = loss_total(p, batch, cfg, 77);
    Eigen::VectorXd numeric(p.theta.size());
    const double h = 1e-4;
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) {
      auto plus = p, minus = p;
      plus.theta[i] += h;
      minus.theta[i] -= h;
      numeric[i] = (loss_total(plus, batch, cfg, 77).loss - loss_total(minus, batch, cfg, 77).loss) / (2 * h);
    }
    const double rel = (numeric - res.grad).norm() / std::max(1e-12, numeric.norm() + res.grad.norm());
    EXPECT_LE(rel, 1e-4) << "lambda=" << lambda;
  }
}

TEST(Model, NoPositivesMeansNoHuberTerm) {
  const ModelShape shape{1, 4, 2, 3};
  auto batch = random_batch(shape, 4, 2);
  for (auto& ex : batch) ex.y = false;
  const auto res = loss_total(ModelParams::random(shape, 3), batch, LossConfig{});
  EXPECT_DOUBLE_EQ(res.huber, 0.0);
  EXPECT_NEAR(res.loss, 0.5 * res.bce, 1e-12);
}

TEST(Model, EvalMultisampleIsDeterministicPerSeed) {
  const ModelShape shape{1, 8, 4, 4};
  const auto p = ModelParams::random(shape, 5);
  const auto batch = random_batch(shape, 1, 6);
  Rng a(3), b(3);
  const auto pa = forward(p, batch[0].features, batch[0].embedding, ForwardMode::eval_multisample, 0.2, 8, &a);
  const auto pb = forward(p, batch[0].features, batch[0].embedding, ForwardMode::eval_multisample, 0.2, 8, &b);
  EXPECT_EQ(pa.hint_logit, pb.hint_logit);
  const auto plain = forward(p, batch[0].features, batch[0].embedding, ForwardMode::eval_plain);
  EXPECT_DOUBLE_EQ(pa.size_log, plain.size_log);
}

TEST(Train, EmaUpdateAndAdamStep) {
  Eigen::VectorXd shadow = Eigen::VectorXd::Zero(2);
  ema_update(shadow, Eigen::Vector2d(1, 2), 0.9);
  EXPECT_NEAR(shadow[0], 0.1, 1e-15);
  EXPECT_NEAR(shadow[1], 0.2, 1e-15);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(1, cfg);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1.0);
  opt.step(theta, Eigen::VectorXd::Constant(1, 5.0));
  // First bias-corrected Adam step moves by ~lr regardless of gradient scale.
  EXPECT_NEAR(theta[0], 1.0 - cfg.learning_rate, 1e-9);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Train, BalancedSamplerHalvesClasses) {
  const ModelShape shape{1, 2, 2, 2};
  auto data = random_batch(shape, 100, 1);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].y = i < 10;
  const BalancedSampler s(data);
  EXPECT_TRUE(s.balanced());
  Rng rng(2);
  int pos = 0;
  for (int i = 0; i < 20000; ++i) pos += data[s.next(rng)].y ? 1 : 0;
  EXPECT_NEAR(pos / 20000.0, 0.5, 0.02);
  for (auto& ex : data) ex.y = false;
  EXPECT_FALSE(BalancedSampler(data).balanced());
}

TEST(Train, LearnsSeparableHintLabel) {
  std::vector<labeling::LabeledExample> xs;
  for (int i = 0; i < 200; ++i) {
    const bool hard = i % 2 == 1;
    const std::string text = hard ? "integral derivative matrix eigen " + std::to_string(i)
                                  : "apples oranges basket " + std::to_string(i);
    xs.push_back(example("e" + std::to_string(i), text, hard ? 40 : 0));
  }
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 3;
  const std::span<const labeling::LabeledExample> all(xs);
  const auto fit = fit_model(all.subspan(0, 150), all.subspan(150), FeatureMode::proactive, "hashed-ngram-64", cfg);
  int right = 0;
  for (std::size_t i = 150; i < xs.size(); ++i) {
    right += (fit.model->predict(xs[i].query).hint_prob > 0.5) == xs[i].y ? 1 : 0;
  }
  EXPECT_GE(right, 48);
  EXPECT_FALSE(fit.training.history.empty());
  EXPECT_LT(fit.training.best_epoch, cfg.epochs);
}

TEST(Train, DeterministicForSeed) {
  std::vector<labeling::LabeledExample> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(example("d" + std::to_string(i), "word " + std::to_string(i * 7), i % 3 ? 0 : 20));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.min_steps_per_epoch = 5;
  cfg.seed = 11;
  const auto a = fit_model(xs, {}, FeatureMode::proactive, "hashed-ngram-32", cfg);
  const auto b = fit_model(xs, {}, FeatureMode::proactive, "hashed-ngram-32", cfg);
  EXPECT_EQ(a.model->params().theta, b.model->params().theta);
  EXPECT_EQ(a.model->fingerprint(), data_fingerprint(xs));
}

TEST(ShepherdModelFile, SaveLoadPredictsIdentically) {
  std::vector<labeling::LabeledExample> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(example("s" + std::to_string(i), "alpha beta " + std::to_string(i), i % 2 ? 10 : 0));
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.min_steps_per_epoch = 3;
  const auto fit = fit_model(xs, {}, FeatureMode::proactive, "hashed-ngram-32", cfg);
  const auto path = (std::filesystem::temp_directory_path() / "shepherd_model_rt.json").string();
  fit.model->save(path);
  const auto loaded = ShepherdModel::load(path);
  for (const auto& ex : xs) {
    const auto a = fit.model->predict(ex.query);
    const auto b = loaded.predict(ex.query);
    EXPECT_DOUBLE_EQ(a.hint_logit, b.hint_logit);
    EXPECT_DOUBLE_EQ(a.size_log, b.size_log);
  }
  auto j = fit.model->to_json();
  j["schema"] = "shepherd-model/0";
  EXPECT_THROW(ShepherdModel::from_json(j), SchemaError);
  std::filesystem::remove(path);
}
