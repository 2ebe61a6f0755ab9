#include "shepherd/backends/ledger.hpp"

namespace shepherd::backends {

namespace {

void accumulate(UsageTotals& totals, const TokenUsage& usage, Money charge) {
  totals.input_tokens += usage.input_tokens;
  totals.output_tokens += usage.output_tokens;
  totals.dollars += charge;
}

}  // namespace

void UsageLedger::record(const BackendSpec& backend, const TokenUsage& usage) {
  const Money amount = charge(usage.input_tokens, backend.price_in) + charge(usage.output_tokens, backend.price_out);
  events_.push_back(UsageEvent{backend.model_name, backend.role, usage, amount});
  accumulate(by_backend_[backend.model_name], usage, amount);
  accumulate(backend.role == Role::slm ? slm_ : llm_, usage, amount);
  total_ += amount;
}

void UsageLedger::merge(const UsageLedger& other) {
  for (const auto& e : other.events_) {
    events_.push_back(e);
    accumulate(by_backend_[e.backend], e.usage, e.charge);
    accumulate(e.role == Role::slm ? slm_ : llm_, e.usage, e.charge);
    total_ += e.charge;
  }
}

UsageTotals UsageLedger::totals(Role role) const { return role == Role::slm ? slm_ : llm_; }

Money UsageLedger::rederive_total() const {
  Money sum;
  for (const auto& e : events_) sum += e.charge;
  return sum;
}

UsageLedger record_usage(UsageLedger ledger, const GenerationResult& result, const BackendSpec& backend) {
  ledger.record(backend, result);
  return ledger;
}

void SharedLedger::merge(const UsageLedger& ledger) {
  std::lock_guard lock(mutex_);
  ledger_.merge(ledger);
}

UsageLedger SharedLedger::snapshot() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

GenerationResult generate(Backend& backend, const TokenSequence& prompt, const DecodingParams& params,
                          UsageLedger& ledger) {
  GenerationResult result = backend.generate(prompt, params);
  ledger.record(backend.spec(), result);
  return result;
}

}  // namespace shepherd::backends
