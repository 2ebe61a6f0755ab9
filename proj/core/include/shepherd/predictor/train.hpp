#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "shepherd/predictor/model.hpp"

namespace shepherd::predictor {

struct TrainConfig {
  double lambda = 0.5;
  double learning_rate = 3e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_decay = 0.999;
  double dropout = 0.2;
  double huber_delta = 1.0;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  /// Lower bound on optimizer steps per epoch for small datasets.
  std::size_t min_steps_per_epoch = 50;
  std::size_t dropout_passes = 8;
  std::size_t fusion = 16;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Draws indices so that each batch is half positives, half negatives in
/// expectation: an example of class c has weight 1 / (2 |c|). Falls back to
/// uniform sampling (with a warning) when one class is empty.
class BalancedSampler {
 public:
  explicit BalancedSampler(std::span<const TrainingExample> data);

  std::size_t next(Rng& rng) const;
  bool balanced() const { return balanced_; }

 private:
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  std::size_t size_ = 0;
  bool balanced_ = true;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(std::size_t n, const TrainConfig& cfg);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);
  std::size_t steps() const { return t_; }

 private:
  Eigen::VectorXd m_, v_;
  double lr_, wd_, b1_, b2_, eps_;
  std::size_t t_ = 0;
};

/// shadow <- decay * shadow + (1 - decay) * live.
void ema_update(Eigen::VectorXd& shadow, const Eigen::VectorXd& live, double decay);

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  /// EMA snapshot with the lowest validation loss.
  ModelParams params;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Full-batch loss without dropout.
double evaluate_loss(const ModelParams& params, std::span<const TrainingExample> data, const TrainConfig& cfg);

/// Single-threaded and deterministic for a fixed seed. Uses the training
/// split for validation when `val` is empty.
TrainResult train(std::span<const TrainingExample> train_set, std::span<const TrainingExample> val,
                  const TrainConfig& cfg);

}  // namespace shepherd::predictor
