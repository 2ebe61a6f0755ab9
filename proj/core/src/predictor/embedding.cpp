#include "shepherd/predictor/embedding.hpp"

#include "shepherd/core/errors.hpp"
#include "shepherd/core/tokens.hpp"

namespace shepherd::predictor {

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashedNgramEmbedder::id() const { return "hashed-ngram-" + std::to_string(dim_); }

Eigen::VectorXd HashedNgramEmbedder::embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t n = 3; n <= 5; ++n) {
    if (text.size() < n) break;
    const std::uint64_t seed = fnv1a64(std::string_view(reinterpret_cast<const char*>(&n), sizeof n));
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      const std::uint64_t h = fnv1a64(text.substr(i, n), seed);
      const auto bucket = static_cast<Eigen::Index>(h % dim_);
      v[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

EmbeddingRegistry& EmbeddingRegistry::global() {
  static EmbeddingRegistry registry;
  return registry;
}

void EmbeddingRegistry::add(std::shared_ptr<const EmbeddingProvider> provider) {
  std::lock_guard lock(mutex_);
  providers_[provider->id()] = std::move(provider);
}

std::shared_ptr<const EmbeddingProvider> EmbeddingRegistry::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = providers_.find(id); it != providers_.end()) return it->second;
  constexpr std::string_view kPrefix = "hashed-ngram-";
  if (id.starts_with(kPrefix)) {
    try {
      std::size_t used = 0;
      const auto digits = id.substr(kPrefix.size());
      const auto dim = std::stoul(digits, &used);
      if (used != digits.size()) throw ConfigError("bad embedding dimension");
      auto provider = std::make_shared<const HashedNgramEmbedder>(dim);
      providers_[id] = provider;
      return provider;
    } catch (const std::logic_error&) {
    }
  }
  throw ConfigError("unknown embedding provider: " + id);
}

}  // namespace shepherd::predictor
