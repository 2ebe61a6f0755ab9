#include "shepherd/predictor/predictor.hpp"

#include <cstdio>
#include <fstream>

#include "shepherd/core/errors.hpp"
#include "shepherd/core/tokens.hpp"

namespace shepherd::predictor {

ShepherdModel::ShepherdModel(FeatureMode mode, std::shared_ptr<const EmbeddingProvider> embedder,
                             Standardizer standardizer, ModelParams params, TrainConfig hyper, std::string fingerprint)
    : mode_(mode),
      embedder_(std::move(embedder)),
      standardizer_(std::move(standardizer)),
      params_(std::move(params)),
      hyper_(hyper),
      fingerprint_(std::move(fingerprint)) {
  if (!embedder_) throw ConfigError("model needs an embedding provider");
  if (params_.shape.embed_dim != embedder_->dim()) throw ConfigError("embedding width does not match the model");
  if (params_.shape.features != feature_count(mode_) ||
      static_cast<std::size_t>(standardizer_.mean.size()) != params_.shape.features) {
    throw ConfigError("feature width does not match the model");
  }
}

Prediction ShepherdModel::predict_raw(const Eigen::VectorXd& raw_features, const Eigen::VectorXd& embedding,
                                      std::uint64_t mask_seed) const {
  Rng rng(mask_seed);
  return forward(params_, standardizer_.apply(raw_features), embedding, ForwardMode::eval_multisample, hyper_.dropout,
                 hyper_.dropout_passes, &rng);
}

Prediction ShepherdModel::predict(const Query& q, std::span<const labeling::SlmSample> samples) const {
  const auto features = extract_features(q, mode_, samples).values();
  return predict_raw(features, embedder_->embed(q.text()), fnv1a64(q.text(), hyper_.seed ^ 0xcbf29ce484222325ULL));
}

nlohmann::json ShepherdModel::to_json() const {
  const auto& s = params_.shape;
  return {{"schema", kModelSchema},
          {"mode", to_string(mode_)},
          {"embedder", {{"id", embedder_->id()}, {"dim", embedder_->dim()}}},
          {"shape", {{"features", s.features}, {"embed_dim", s.embed_dim}, {"fusion", s.fusion}, {"hidden", s.hidden}}},
          {"standardizer", standardizer_},
          {"hyperparameters", hyper_},
          {"data_fingerprint", fingerprint_},
          {"weights", std::vector<double>(params_.theta.data(), params_.theta.data() + params_.theta.size())}};
}

ShepherdModel ShepherdModel::from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kModelSchema) {
    throw SchemaError(std::string("model artifact schema must be ") + kModelSchema);
  }
  const auto mode = parse_feature_mode(j.at("mode").get<std::string>());
  auto embedder = EmbeddingRegistry::global().get(j.at("embedder").at("id").get<std::string>());
  if (embedder->dim() != j.at("embedder").at("dim").get<std::size_t>()) {
    throw SchemaError("embedding provider dimension differs from the artifact");
  }
  const auto& js = j.at("shape");
  ModelShape shape{js.at("features").get<std::size_t>(), js.at("embed_dim").get<std::size_t>(),
                   js.at("fusion").get<std::size_t>(), js.at("hidden").get<std::size_t>()};
  const auto weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != shape.param_count()) throw SchemaError("weight count does not match the model shape");
  ModelParams params{shape, Eigen::Map<const Eigen::VectorXd>(weights.data(), Eigen::Index(weights.size()))};
  return ShepherdModel(mode, std::move(embedder), j.at("standardizer").get<Standardizer>(), std::move(params),
                       j.at("hyperparameters").get<TrainConfig>(), j.value("data_fingerprint", std::string()));
}

void ShepherdModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model: " + path);
  out << to_json().dump() << '\n';
}

ShepherdModel ShepherdModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model: " + path);
  return from_json(nlohmann::json::parse(in));
}

std::string data_fingerprint(std::span<const labeling::LabeledExample> examples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& ex : examples) h = fnv1a64(nlohmann::json(ex).dump() + "\n", h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Eigen::VectorXd> raw_features(std::span<const labeling::LabeledExample> examples, FeatureMode mode) {
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(examples.size());
  for (const auto& ex : examples) rows.push_back(extract_features(ex.query, mode, ex.slm_samples).values());
  return rows;
}

std::vector<TrainingExample> make_training_set(std::span<const labeling::LabeledExample> examples, FeatureMode mode,
                                               const EmbeddingProvider& embedder, const Standardizer& standardizer) {
  const auto rows = raw_features(examples, mode);
  std::vector<TrainingExample> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.push_back({standardizer.apply(rows[i]), embedder.embed(examples[i].query.text()), examples[i].y,
                   examples[i].r});
  }
  return out;
}

FitResult fit_model(std::span<const labeling::LabeledExample> train_split,
                    std::span<const labeling::LabeledExample> val_split, FeatureMode mode,
                    const std::string& embedder_id, const TrainConfig& cfg) {
  if (train_split.empty()) throw ConfigError("training split is empty");
  auto embedder = EmbeddingRegistry::global().get(embedder_id);
  const auto rows = raw_features(train_split, mode);
  const auto standardizer = Standardizer::fit(rows);
  const auto train_set = make_training_set(train_split, mode, *embedder, standardizer);
  const auto val_set = make_training_set(val_split, mode, *embedder, standardizer);
  FitResult fit;
  fit.training = train(train_set, val_set, cfg);
  fit.model = std::make_shared<ShepherdModel>(mode, std::move(embedder), standardizer, fit.training.params, cfg,
                                              data_fingerprint(train_split));
  return fit;
}

}  // namespace shepherd::predictor
