#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "shepherd/backends/mock_backend.hpp"
#include "shepherd/core/money.hpp"
#include "shepherd/predictor/predictor.hpp"
#include "shepherd/simulator/trace.hpp"

namespace shepherd::fixtures {

inline backends::BackendSpec mock_spec(backends::Role role, const CostModel& cm = hosted_llama70b_pricing(),
                                       std::size_t n_max = kDefaultMaxOutputTokens) {
  backends::BackendSpec s;
  s.kind = backends::BackendKind::mock;
  s.role = role;
  s.model_name = role == backends::Role::slm ? "mock-slm" : "mock-llm";
  s.price_in = role == backends::Role::slm ? cm.slm_in : cm.llm_in;
  s.price_out = role == backends::Role::slm ? cm.slm_out : cm.llm_out;
  s.max_output_tokens = n_max;
  return s;
}

struct MockPair {
  std::unique_ptr<backends::MockBackend> slm;
  std::unique_ptr<backends::MockBackend> llm;
};

inline MockPair mocks_for(std::span<const simulator::SyntheticQuery> trace,
                          const CostModel& cm = hosted_llama70b_pricing()) {
  auto scripts = simulator::build_mock_scripts(trace);
  return {std::make_unique<backends::MockBackend>(mock_spec(backends::Role::slm, cm),
                                                  std::make_shared<const backends::MockScript>(std::move(scripts.slm))),
          std::make_unique<backends::MockBackend>(mock_spec(backends::Role::llm, cm),
                                                  std::make_shared<const backends::MockScript>(std::move(scripts.llm)))};
}

inline MockPair mocks_for(backends::MockScript slm, backends::MockScript llm,
                          const CostModel& cm = hosted_llama70b_pricing()) {
  return {std::make_unique<backends::MockBackend>(mock_spec(backends::Role::slm, cm),
                                                  std::make_shared<const backends::MockScript>(std::move(slm))),
          std::make_unique<backends::MockBackend>(mock_spec(backends::Role::llm, cm),
                                                  std::make_shared<const backends::MockScript>(std::move(llm)))};
}

// Predictor driven by a callback; stands in for a trained model.
class FnPredictor final : public predictor::Predictor {
 public:
  using Fn = std::function<predictor::Prediction(const Query&)>;
  explicit FnPredictor(Fn fn, predictor::FeatureMode mode = predictor::FeatureMode::proactive)
      : fn_(std::move(fn)), mode_(mode) {}
  predictor::FeatureMode mode() const override { return mode_; }
  predictor::Prediction predict(const Query& q, std::span<const labeling::SlmSample> = {}) const override {
    return fn_(q);
  }

 private:
  Fn fn_;
  predictor::FeatureMode mode_;
};

}  // namespace shepherd::fixtures
