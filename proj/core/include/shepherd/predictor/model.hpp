#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace shepherd::predictor {

/// Widths of the fused network.
///
///   g = tanh(W1 f + b1)                      (fusion MLP over scalar features)
///   u = [embedding; g]
///   y_hat = w_h . tanh(W_h u + b_h) + c_h    (hint head)
///   r_hat = w_s . tanh(W_s u + b_s) + c_s    (size head)
struct ModelShape {
  std::size_t features = 1;
  std::size_t embed_dim = 256;
  std::size_t fusion = 16;
  std::size_t hidden = 32;

  std::size_t fused() const { return embed_dim + fusion; }
  std::size_t param_count() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct Prediction {
  double hint_logit = 0.0;
  /// sigmoid(hint_logit).
  double hint_prob = 0.5;
  double size_log = 0.0;
};

double sigmoid(double x);

/// Logits are clamped to this magnitude before the sigmoid at inference.
inline constexpr double kLogitClamp = 30.0;

Prediction make_prediction(double logit, double size_log);

/// All weights live in one flat vector so optimizer state, EMA and gradient
/// checks can treat them uniformly.
struct ModelParams {
  ModelShape shape;
  Eigen::VectorXd theta;

  static ModelParams zeros(const ModelShape& shape);
  /// Glorot-uniform weights, zero biases.
  static ModelParams random(const ModelShape& shape, std::uint64_t seed);

  /// c_s, the size head's output bias (last entry of theta).
  double& size_bias() { return theta[theta.size() - 1]; }
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Rng& rng);

enum class ForwardMode { train_dropout, eval_multisample, eval_plain };

/// `features` must already be standardized. train_dropout draws one inverted
/// dropout mask on u shared by both heads; eval_multisample averages the hint
/// logit over `passes` masks and computes the size head without dropout.
/// The returned probability uses the clamped logit. Throws ConfigError on
/// shape mismatch.
Prediction forward(const ModelParams& params, const Eigen::VectorXd& features, const Eigen::VectorXd& embedding,
                   ForwardMode mode, double dropout = 0.0, std::size_t passes = 1, Rng* rng = nullptr);

struct TrainingExample {
  Eigen::VectorXd features;
  Eigen::VectorXd embedding;
  bool y = false;
  double r = 0.0;
};

struct LossConfig {
  double lambda = 0.5;
  double huber_delta = 1.0;
  /// Dropout on u during the loss; ignored without a dropout seed.
  double dropout = 0.0;
};

struct LossResult {
  double loss = 0.0;
  double bce = 0.0;
  double huber = 0.0;
  Eigen::VectorXd grad;
};

/// binary cross-entropy of the hint logit (mean over the batch), plus
/// Huber on r_hat - r (mean over positives, 0 when there are none), mixed by
/// lambda. With a dropout seed every example draws its mask from a generator
/// seeded with it, so repeated calls see identical masks.
LossResult loss_total(const ModelParams& params, std::span<const TrainingExample* const> batch, const LossConfig& cfg,
                      std::optional<std::uint64_t> dropout_seed = std::nullopt);
LossResult loss_total(const ModelParams& params, std::span<const TrainingExample> batch, const LossConfig& cfg,
                      std::optional<std::uint64_t> dropout_seed = std::nullopt);

double huber(double z, double delta);
/// Numerically stable log(1 + e^x).
double softplus(double x);

}  // namespace shepherd::predictor
