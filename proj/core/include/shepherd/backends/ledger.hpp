#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "shepherd/backends/backend.hpp"

namespace shepherd::backends {

struct UsageEvent {
  std::string backend;
  Role role = Role::slm;
  TokenUsage usage;
  Money charge;
};

struct UsageTotals {
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  Money dollars;

  friend bool operator==(const UsageTotals&, const UsageTotals&) = default;
};

/// Append-only record of token usage and charges. A plain value type; wrap in
/// SharedLedger for concurrent appends.
class UsageLedger {
 public:
  void record(const BackendSpec& backend, const TokenUsage& usage);
  void record(const BackendSpec& backend, const GenerationResult& result) { record(backend, result.usage); }
  void merge(const UsageLedger& other);

  UsageTotals totals(Role role) const;
  const std::map<std::string, UsageTotals>& by_backend() const { return by_backend_; }
  const std::vector<UsageEvent>& events() const { return events_; }

  Money total() const { return total_; }
  /// Total recomputed from the raw event log.
  Money rederive_total() const;

 private:
  std::vector<UsageEvent> events_;
  std::map<std::string, UsageTotals> by_backend_;
  UsageTotals slm_;
  UsageTotals llm_;
  Money total_;
};

/// Functional form: returns `ledger` with `result` appended.
UsageLedger record_usage(UsageLedger ledger, const GenerationResult& result, const BackendSpec& backend);

/// Mutex-guarded ledger shared by concurrent request handlers.
class SharedLedger {
 public:
  void merge(const UsageLedger& ledger);
  UsageLedger snapshot() const;

 private:
  mutable std::mutex mutex_;
  UsageLedger ledger_;
};

/// Generate through `backend` and record the usage on success only.
GenerationResult generate(Backend& backend, const TokenSequence& prompt, const DecodingParams& params,
                          UsageLedger& ledger);

}  // namespace shepherd::backends
