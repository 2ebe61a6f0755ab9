#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace shepherd::predictor {

/// Pooled fixed-width text representation of a query.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  /// Deterministic; returns a dim()-length vector.
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

/// Signed feature hashing of character 3..5-grams into D buckets, then L2
/// normalization. Text shorter than 3 bytes embeds to the zero vector.
class HashedNgramEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedNgramEmbedder(std::size_t dim = 256);

  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

/// Process-wide provider lookup. "hashed-ngram-<D>" ids resolve on demand.
class EmbeddingRegistry {
 public:
  static EmbeddingRegistry& global();

  void add(std::shared_ptr<const EmbeddingProvider> provider);
  /// Throws ConfigError for unknown ids.
  std::shared_ptr<const EmbeddingProvider> get(const std::string& id);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const EmbeddingProvider>> providers_;
};

inline constexpr const char* kDefaultEmbedder = "hashed-ngram-256";

}  // namespace shepherd::predictor
