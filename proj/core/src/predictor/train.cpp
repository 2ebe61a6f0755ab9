#include "shepherd/predictor/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "shepherd/core/errors.hpp"

namespace shepherd::predictor {

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lambda", c.lambda},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"ema_decay", c.ema_decay},
       {"dropout", c.dropout},
       {"huber_delta", c.huber_delta},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"min_steps_per_epoch", c.min_steps_per_epoch},
       {"dropout_passes", c.dropout_passes},
       {"fusion", c.fusion},
       {"hidden", c.hidden},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.lambda = j.value("lambda", d.lambda);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
  c.ema_decay = j.value("ema_decay", d.ema_decay);
  c.dropout = j.value("dropout", d.dropout);
  c.huber_delta = j.value("huber_delta", d.huber_delta);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.min_steps_per_epoch = j.value("min_steps_per_epoch", d.min_steps_per_epoch);
  c.dropout_passes = j.value("dropout_passes", d.dropout_passes);
  c.fusion = j.value("fusion", d.fusion);
  c.hidden = j.value("hidden", d.hidden);
  c.seed = j.value("seed", d.seed);
  if (c.lambda < 0.0 || c.lambda > 1.0) throw ConfigError("lambda must be in [0, 1]");
  if (c.ema_decay < 0.0 || c.ema_decay > 1.0) throw ConfigError("ema_decay must be in [0, 1]");
  if (c.batch_size == 0 || c.epochs == 0) throw ConfigError("batch_size and epochs must be positive");
}

BalancedSampler::BalancedSampler(std::span<const TrainingExample> data) : size_(data.size()) {
  if (data.empty()) throw ConfigError("cannot sample from an empty dataset");
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].y ? positives_ : negatives_).push_back(i);
  if (positives_.empty() || negatives_.empty()) {
    balanced_ = false;
    spdlog::warn("training set has only {} examples; falling back to uniform sampling",
                 positives_.empty() ? "negative" : "positive");
  }
}

std::size_t BalancedSampler::next(Rng& rng) const {
  auto pick = [&](std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * double(n))); };
  if (!balanced_) return pick(size_);
  const auto& cls = uniform01(rng) < 0.5 ? positives_ : negatives_;
  return cls[pick(cls.size())];
}

AdamW::AdamW(std::size_t n, const TrainConfig& cfg)
    : m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      lr_(cfg.learning_rate),
      wd_(cfg.weight_decay),
      b1_(cfg.beta1),
      b2_(cfg.beta2),
      eps_(cfg.adam_eps) {}

void AdamW::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1_, double(t_));
  const double c2 = 1.0 - std::pow(b2_, double(t_));
  theta.array() -= lr_ * ((m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_) + wd_ * theta.array());
}

void ema_update(Eigen::VectorXd& shadow, const Eigen::VectorXd& live, double decay) {
  if (decay == 1.0) return;
  if (decay == 0.0) {
    shadow = live;
    return;
  }
  shadow = decay * shadow + (1.0 - decay) * live;
}

double evaluate_loss(const ModelParams& params, std::span<const TrainingExample> data, const TrainConfig& cfg) {
  return loss_total(params, data, LossConfig{cfg.lambda, cfg.huber_delta, 0.0}).loss;
}

TrainResult train(std::span<const TrainingExample> train_set, std::span<const TrainingExample> val,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  ModelShape shape{static_cast<std::size_t>(train_set.front().features.size()),
                   static_cast<std::size_t>(train_set.front().embedding.size()), cfg.fusion, cfg.hidden};
  Rng rng(cfg.seed);
  ModelParams live = ModelParams::random(shape, rng());
  // Start the size head at the mean positive target instead of 0.
  double r_sum = 0.0;
  std::size_t positives = 0;
  for (const auto& ex : train_set) {
    if (ex.y) {
      r_sum += ex.r;
      ++positives;
    }
  }
  if (positives > 0) live.size_bias() = r_sum / double(positives);
  ModelParams shadow = live;
  AdamW opt(shape.param_count(), cfg);
  const BalancedSampler sampler(train_set);
  const auto& val_set = val.empty() ? train_set : val;

  const std::size_t steps =
      std::max(cfg.min_steps_per_epoch, (train_set.size() + cfg.batch_size - 1) / cfg.batch_size);
  const LossConfig loss_cfg{cfg.lambda, cfg.huber_delta, cfg.dropout};

  TrainResult result;
  result.params = shadow;
  double best = std::numeric_limits<double>::infinity();
  std::vector<const TrainingExample*> batch(cfg.batch_size);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      for (auto& slot : batch) slot = &train_set[sampler.next(rng)];
      const auto loss = loss_total(live, std::span<const TrainingExample* const>(batch), loss_cfg, rng());
      opt.step(live.theta, loss.grad);
      ++t;
      // Warm-up ramp so short runs are not dominated by the initial weights.
      ema_update(shadow.theta, live.theta, std::min(cfg.ema_decay, (1.0 + double(t)) / (10.0 + double(t))));
      epoch_loss += loss.loss;
    }
    EpochRecord rec{epoch_loss / double(steps), evaluate_loss(shadow, val_set, cfg)};
    result.history.push_back(rec);
    spdlog::debug("epoch {} train {:.6f} val {:.6f}", epoch, rec.train_loss, rec.val_loss);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.best_epoch = epoch;
      result.params = shadow;
    }
  }
  return result;
}

}  // namespace shepherd::predictor
