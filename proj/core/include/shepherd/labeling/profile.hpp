#pragma once

#include <array>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace shepherd::labeling {

/// Log-normal length distribution parameterized by its median.
struct LengthDistribution {
  double median = 120.0;
  /// Standard deviation of log(length).
  double sigma = 0.5;
  std::size_t min = 1;
  std::size_t max = 2048;
};

/// Shape of the n* distribution: mass at n* = 0, mass per 10%-of-|h_l|
/// bucket (10%, 20%, ..., 90%), and mass that needs the full LLM response.
struct TraceProfile {
  std::string name;
  double p_zero = 1.0;
  std::array<double, 9> bucket_masses{};
  double p_unsolvable = 0.0;
  LengthDistribution query_len{120.0, 0.5, 8, 1024};
  LengthDistribution llm_len{250.0, 0.5, 20, 2048};

  /// Throws ConfigError unless every mass is in [0, 1] and they sum to 1
  /// within 1e-9.
  void validate() const;
};

void to_json(nlohmann::json& j, const TraceProfile& p);
void from_json(const nlohmann::json& j, TraceProfile& p);

TraceProfile gsm8k_profile();
TraceProfile cnk12_profile();

/// Named preset ("gsm8k", "cnk12") or a path to a profile JSON file.
TraceProfile load_profile(std::string_view name_or_path);

}  // namespace shepherd::labeling
