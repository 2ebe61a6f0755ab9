#include "shepherd/labeling/profile.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "shepherd/core/errors.hpp"

namespace shepherd::labeling {

void TraceProfile::validate() const {
  auto check = [](double m, const char* what) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(std::string("profile mass out of [0,1]: ") + what);
  };
  check(p_zero, "p_zero");
  check(p_unsolvable, "p_unsolvable");
  for (double m : bucket_masses) check(m, "bucket");
  const double total = p_zero + p_unsolvable + std::accumulate(bucket_masses.begin(), bucket_masses.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("profile '" + name + "' masses sum to " + std::to_string(total) + ", not 1");
  }
  for (const auto* d : {&query_len, &llm_len}) {
    if (!(d->median > 0.0) || d->sigma < 0.0 || d->min > d->max) throw ConfigError("invalid length distribution");
  }
}

namespace {

void length_to_json(nlohmann::json& j, const LengthDistribution& d) {
  j = {{"median", d.median}, {"sigma", d.sigma}, {"min", d.min}, {"max", d.max}};
}

LengthDistribution length_from_json(const nlohmann::json& j, LengthDistribution d) {
  d.median = j.value("median", d.median);
  d.sigma = j.value("sigma", d.sigma);
  d.min = j.value("min", d.min);
  d.max = j.value("max", d.max);
  return d;
}

}  // namespace

void to_json(nlohmann::json& j, const TraceProfile& p) {
  nlohmann::json q, l;
  length_to_json(q, p.query_len);
  length_to_json(l, p.llm_len);
  j = {{"name", p.name},
       {"p_zero", p.p_zero},
       {"bucket_masses", p.bucket_masses},
       {"p_unsolvable", p.p_unsolvable},
       {"query_len", q},
       {"llm_len", l}};
}

void from_json(const nlohmann::json& j, TraceProfile& p) {
  p.name = j.value("name", std::string("custom"));
  p.p_zero = j.at("p_zero").get<double>();
  p.p_unsolvable = j.value("p_unsolvable", 0.0);
  const auto buckets = j.value("bucket_masses", std::vector<double>(9, 0.0));
  if (buckets.size() != 9) throw ConfigError("bucket_masses needs 9 entries (10%..90%)");
  std::copy(buckets.begin(), buckets.end(), p.bucket_masses.begin());
  if (j.contains("query_len")) p.query_len = length_from_json(j["query_len"], p.query_len);
  if (j.contains("llm_len")) p.llm_len = length_from_json(j["llm_len"], p.llm_len);
  p.validate();
}

// The 50-80% buckets are not quoted individually; they are filled with a
// geometric decay that closes the remaining mass.
TraceProfile gsm8k_profile() {
  TraceProfile p;
  p.name = "gsm8k";
  p.p_zero = 0.806;
  p.bucket_masses = {0.066, 0.030, 0.023, 0.015, 0.013, 0.011, 0.010, 0.009, 0.004};
  p.p_unsolvable = 0.013;
  return p;
}

TraceProfile cnk12_profile() {
  TraceProfile p;
  p.name = "cnk12";
  p.p_zero = 0.467;
  p.bucket_masses = {0.136, 0.081, 0.058, 0.045, 0.036, 0.030, 0.025, 0.021, 0.014};
  p.p_unsolvable = 0.087;
  return p;
}

TraceProfile load_profile(std::string_view name_or_path) {
  if (name_or_path == "gsm8k") return gsm8k_profile();
  if (name_or_path == "cnk12") return cnk12_profile();
  std::ifstream in{std::string(name_or_path)};
  if (!in) throw ConfigError("unknown profile: " + std::string(name_or_path));
  return nlohmann::json::parse(in).get<TraceProfile>();
}

}  // namespace shepherd::labeling
