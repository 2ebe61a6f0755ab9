#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shepherd/labeling/labeling.hpp"
#include "shepherd/predictor/embedding.hpp"
#include "shepherd/predictor/features.hpp"
#include "shepherd/predictor/model.hpp"
#include "shepherd/predictor/train.hpp"

namespace shepherd::predictor {

/// Anything that scores a query for the policy. Implementations must be safe
/// for concurrent calls.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual FeatureMode mode() const = 0;
  /// `samples` are the K reactive SLM samples (ignored in proactive mode).
  virtual Prediction predict(const Query& q, std::span<const labeling::SlmSample> samples = {}) const = 0;
};

inline constexpr const char* kModelSchema = "shepherd-model/1";

/// Trained two-stage model plus everything needed to score raw queries.
class ShepherdModel final : public Predictor {
 public:
  ShepherdModel(FeatureMode mode, std::shared_ptr<const EmbeddingProvider> embedder, Standardizer standardizer,
                ModelParams params, TrainConfig hyper, std::string fingerprint);

  FeatureMode mode() const override { return mode_; }
  /// Multi-sample dropout with hyper.dropout_passes masks. The mask generator
  /// is seeded from the query text, so a query always gets the same result.
  Prediction predict(const Query& q, std::span<const labeling::SlmSample> samples = {}) const override;
  /// Same, from already-extracted inputs.
  Prediction predict_raw(const Eigen::VectorXd& raw_features, const Eigen::VectorXd& embedding,
                         std::uint64_t mask_seed) const;

  const ModelParams& params() const { return params_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const TrainConfig& hyper() const { return hyper_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const EmbeddingProvider& embedder() const { return *embedder_; }

  nlohmann::json to_json() const;
  static ShepherdModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static ShepherdModel load(const std::string& path);

 private:
  FeatureMode mode_;
  std::shared_ptr<const EmbeddingProvider> embedder_;
  Standardizer standardizer_;
  ModelParams params_;
  TrainConfig hyper_;
  std::string fingerprint_;
};

/// Hex FNV-1a digest of the serialized examples.
std::string data_fingerprint(std::span<const labeling::LabeledExample> examples);

std::vector<Eigen::VectorXd> raw_features(std::span<const labeling::LabeledExample> examples, FeatureMode mode);

std::vector<TrainingExample> make_training_set(std::span<const labeling::LabeledExample> examples, FeatureMode mode,
                                               const EmbeddingProvider& embedder, const Standardizer& standardizer);

struct FitResult {
  std::shared_ptr<ShepherdModel> model;
  TrainResult training;
};

/// Fit the standardizer on `train_split`, train, and bundle the best EMA
/// snapshot into a model.
FitResult fit_model(std::span<const labeling::LabeledExample> train_split,
                    std::span<const labeling::LabeledExample> val_split, FeatureMode mode,
                    const std::string& embedder_id, const TrainConfig& cfg);

}  // namespace shepherd::predictor
