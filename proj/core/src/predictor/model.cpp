#include "shepherd/predictor/model.hpp"

#include <algorithm>
#include <cmath>

#include "shepherd/core/errors.hpp"

namespace shepherd::predictor {

namespace {

using Eigen::Index;

// Typed views over the flat parameter (or gradient) vector.
template <typename Scalar>
struct Layers {
  using Mat = Eigen::Map<std::conditional_t<std::is_const_v<Scalar>, const Eigen::MatrixXd, Eigen::MatrixXd>>;
  using Vec = Eigen::Map<std::conditional_t<std::is_const_v<Scalar>, const Eigen::VectorXd, Eigen::VectorXd>>;

  Mat w1, wh, ws;
  Vec b1, bh, vh, bs, vs;
  Scalar* ch;
  Scalar* cs;

  Layers(Scalar* p, const ModelShape& s)
      : w1(p, Index(s.fusion), Index(s.features)),
        wh(p + s.fusion * s.features + s.fusion, Index(s.hidden), Index(s.fused())),
        ws(p + s.fusion * s.features + s.fusion + s.hidden * s.fused() + 2 * s.hidden + 1, Index(s.hidden),
           Index(s.fused())),
        b1(p + s.fusion * s.features, Index(s.fusion)),
        bh(p + s.fusion * s.features + s.fusion + s.hidden * s.fused(), Index(s.hidden)),
        vh(p + s.fusion * s.features + s.fusion + s.hidden * s.fused() + s.hidden, Index(s.hidden)),
        bs(p + s.fusion * s.features + s.fusion + 2 * s.hidden * s.fused() + 2 * s.hidden + 1, Index(s.hidden)),
        vs(p + s.fusion * s.features + s.fusion + 2 * s.hidden * s.fused() + 3 * s.hidden + 1, Index(s.hidden)),
        ch(p + s.fusion * s.features + s.fusion + s.hidden * s.fused() + 2 * s.hidden),
        cs(p + s.fusion * s.features + s.fusion + 2 * s.hidden * s.fused() + 4 * s.hidden + 1) {}
};

void check_shapes(const ModelParams& params, const Eigen::VectorXd& features, const Eigen::VectorXd& embedding) {
  const auto& s = params.shape;
  if (static_cast<std::size_t>(params.theta.size()) != s.param_count()) {
    throw ConfigError("parameter vector does not match the model shape");
  }
  if (static_cast<std::size_t>(features.size()) != s.features) {
    throw ConfigError("expected " + std::to_string(s.features) + " features, got " + std::to_string(features.size()));
  }
  if (static_cast<std::size_t>(embedding.size()) != s.embed_dim) {
    throw ConfigError("expected embedding of width " + std::to_string(s.embed_dim) + ", got " +
                      std::to_string(embedding.size()));
  }
}

Eigen::VectorXd dropout_mask(Index n, double rate, Rng& rng) {
  Eigen::VectorXd mask(n);
  const double keep = 1.0 / (1.0 - rate);
  for (Index i = 0; i < n; ++i) mask[i] = uniform01(rng) < rate ? 0.0 : keep;
  return mask;
}

struct Activations {
  Eigen::VectorXd g;
  Eigen::VectorXd u;  // after dropout
  Eigen::VectorXd ah;
  Eigen::VectorXd as;
  double logit = 0.0;
  double size = 0.0;
};

Activations run(const Layers<const double>& L, const Eigen::VectorXd& f, const Eigen::VectorXd& e,
                const Eigen::VectorXd* mask) {
  Activations a;
  a.g = (L.w1 * f + L.b1).array().tanh();
  a.u.resize(e.size() + a.g.size());
  a.u << e, a.g;
  if (mask) a.u.array() *= mask->array();
  a.ah = (L.wh * a.u + L.bh).array().tanh();
  a.as = (L.ws * a.u + L.bs).array().tanh();
  a.logit = L.vh.dot(a.ah) + *L.ch;
  a.size = L.vs.dot(a.as) + *L.cs;
  return a;
}

}  // namespace

std::size_t ModelShape::param_count() const {
  return fusion * features + fusion + 2 * (hidden * fused() + 2 * hidden + 1);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Prediction make_prediction(double logit, double size_log) {
  const double clamped = std::clamp(logit, -kLogitClamp, kLogitClamp);
  return {clamped, sigmoid(clamped), size_log};
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ModelParams ModelParams::zeros(const ModelShape& shape) {
  return {shape, Eigen::VectorXd::Zero(static_cast<Index>(shape.param_count()))};
}

ModelParams ModelParams::random(const ModelShape& shape, std::uint64_t seed) {
  ModelParams p = zeros(shape);
  Rng rng(seed);
  Layers<double> L(p.theta.data(), shape);
  auto glorot = [&](auto& m, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * a;
  };
  glorot(L.w1, double(shape.features), double(shape.fusion));
  glorot(L.wh, double(shape.fused()), double(shape.hidden));
  glorot(L.vh, double(shape.hidden), 1.0);
  glorot(L.ws, double(shape.fused()), double(shape.hidden));
  glorot(L.vs, double(shape.hidden), 1.0);
  return p;
}

Prediction forward(const ModelParams& params, const Eigen::VectorXd& features, const Eigen::VectorXd& embedding,
                   ForwardMode mode, double dropout, std::size_t passes, Rng* rng) {
  check_shapes(params, features, embedding);
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  const Layers<const double> L(params.theta.data(), params.shape);
  const auto width = static_cast<Index>(params.shape.fused());

  if (mode == ForwardMode::eval_plain || dropout == 0.0) {
    const auto a = run(L, features, embedding, nullptr);
    return make_prediction(a.logit, a.size);
  }
  if (!rng) throw ConfigError("dropout forward passes need a random generator");
  if (mode == ForwardMode::train_dropout) {
    const auto mask = dropout_mask(width, dropout, *rng);
    const auto a = run(L, features, embedding, &mask);
    return make_prediction(a.logit, a.size);
  }
  if (passes == 0) throw ConfigError("multisample inference needs at least one pass");
  double logit = 0.0;
  for (std::size_t m = 0; m < passes; ++m) {
    const auto mask = dropout_mask(width, dropout, *rng);
    logit += run(L, features, embedding, &mask).logit;
  }
  const auto plain = run(L, features, embedding, nullptr);
  return make_prediction(logit / static_cast<double>(passes), plain.size);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double huber(double z, double delta) {
  const double a = std::abs(z);
  return a < delta ? 0.5 * z * z : delta * (a - 0.5 * delta);
}

LossResult loss_total(const ModelParams& params, std::span<const TrainingExample* const> batch, const LossConfig& cfg,
                      std::optional<std::uint64_t> dropout_seed) {
  if (batch.empty()) throw ConfigError("loss_total needs a non-empty batch");
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) throw ConfigError("lambda must be in [0, 1]");
  const auto& shape = params.shape;
  const Layers<const double> L(params.theta.data(), shape);

  LossResult out;
  out.grad = Eigen::VectorXd::Zero(params.theta.size());
  Layers<double> G(out.grad.data(), shape);

  const double n = static_cast<double>(batch.size());
  const double positives =
      static_cast<double>(std::count_if(batch.begin(), batch.end(), [](const auto* ex) { return ex->y; }));
  const bool use_dropout = dropout_seed.has_value() && cfg.dropout > 0.0;
  Rng rng(dropout_seed.value_or(0));
  const auto width = static_cast<Index>(shape.fused());

  for (const TrainingExample* ex : batch) {
    check_shapes(params, ex->features, ex->embedding);
    Eigen::VectorXd mask;
    if (use_dropout) mask = dropout_mask(width, cfg.dropout, rng);
    const auto a = run(L, ex->features, ex->embedding, use_dropout ? &mask : nullptr);

    const double target = ex->y ? 1.0 : 0.0;
    out.bce += softplus(a.logit) - target * a.logit;
    const double d_logit = cfg.lambda / n * (sigmoid(a.logit) - target);

    double d_size = 0.0;
    if (ex->y) {
      const double z = a.size - ex->r;
      out.huber += huber(z, cfg.huber_delta);
      const double dz = std::abs(z) < cfg.huber_delta ? z : cfg.huber_delta * (z > 0 ? 1.0 : -1.0);
      d_size = (1.0 - cfg.lambda) / positives * dz;
    }

    *G.ch += d_logit;
    G.vh += d_logit * a.ah;
    const Eigen::VectorXd dzh = (d_logit * L.vh.array() * (1.0 - a.ah.array().square())).matrix();
    G.wh.noalias() += dzh * a.u.transpose();
    G.bh += dzh;
    Eigen::VectorXd du = L.wh.transpose() * dzh;

    if (d_size != 0.0) {
      *G.cs += d_size;
      G.vs += d_size * a.as;
      const Eigen::VectorXd dzs = (d_size * L.vs.array() * (1.0 - a.as.array().square())).matrix();
      G.ws.noalias() += dzs * a.u.transpose();
      G.bs += dzs;
      du.noalias() += L.ws.transpose() * dzs;
    }

    if (use_dropout) du.array() *= mask.array();
    const auto fusion = static_cast<Index>(shape.fusion);
    const Eigen::VectorXd dz1 = (du.tail(fusion).array() * (1.0 - a.g.array().square())).matrix();
    G.w1.noalias() += dz1 * ex->features.transpose();
    G.b1 += dz1;
  }

  out.bce /= n;
  if (positives > 0.0) out.huber /= positives;
  out.loss = cfg.lambda * out.bce + (1.0 - cfg.lambda) * out.huber;
  return out;
}

LossResult loss_total(const ModelParams& params, std::span<const TrainingExample> batch, const LossConfig& cfg,
                      std::optional<std::uint64_t> dropout_seed) {
  std::vector<const TrainingExample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return loss_total(params, std::span<const TrainingExample* const>(ptrs), cfg, dropout_seed);
}

}  // namespace shepherd::predictor
