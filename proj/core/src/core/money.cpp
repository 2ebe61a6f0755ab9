#include "shepherd/core/money.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "shepherd/core/errors.hpp"

namespace shepherd {

Money Money::from_dollars(double usd) {
  const double pico = std::round(usd * static_cast<double>(kPicoPerDollar));
  if (!std::isfinite(pico) || std::fabs(pico) > 9.0e18) {
    throw ConfigError("money amount out of range");
  }
  return Money(static_cast<std::int64_t>(pico));
}

Money Money::per_million_tokens(double usd_per_million) {
  // $/1M tokens == micro-dollars per token == 1e6 picodollars per token.
  const double pico = std::round(usd_per_million * 1e6);
  if (!std::isfinite(pico)) {
    throw ConfigError("price is not finite");
  }
  return Money(static_cast<std::int64_t>(pico));
}

Money Money::parse(const std::string& decimal) {
  std::size_t i = 0;
  bool negative = false;
  if (i < decimal.size() && (decimal[i] == '-' || decimal[i] == '+')) {
    negative = decimal[i] == '-';
    ++i;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool any_digit = false;
  for (; i < decimal.size() && decimal[i] != '.'; ++i) {
    const char c = decimal[i];
    if (c < '0' || c > '9') {
      throw ConfigError("invalid money literal: " + decimal);
    }
    whole = whole * 10 + (c - '0');
    any_digit = true;
  }
  if (i < decimal.size()) {
    ++i;
    for (; i < decimal.size(); ++i) {
      const char c = decimal[i];
      if (c < '0' || c > '9') {
        throw ConfigError("invalid money literal: " + decimal);
      }
      any_digit = true;
      if (frac_digits == 12) {
        if (c != '0') {
          throw ConfigError("money literal finer than 1e-12: " + decimal);
        }
        continue;
      }
      frac = frac * 10 + (c - '0');
      ++frac_digits;
    }
  }
  if (!any_digit) {
    throw ConfigError("invalid money literal: " + decimal);
  }
  for (int d = frac_digits; d < 12; ++d) {
    frac *= 10;
  }
  const std::int64_t pico = whole * kPicoPerDollar + frac;
  return Money(negative ? -pico : pico);
}

std::string Money::to_string() const {
  std::int64_t v = pico_;
  std::string out;
  if (v < 0) {
    out.push_back('-');
    v = -v;
  }
  out += std::to_string(v / kPicoPerDollar);
  std::int64_t frac = v % kPicoPerDollar;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 12 - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') {
      digits.pop_back();
    }
    out.push_back('.');
    out += digits;
  }
  return out;
}

Money charge(std::size_t tokens, Money price) {
  std::int64_t result = 0;
  if (tokens > static_cast<std::size_t>(std::numeric_limits<std::int64_t>::max()) ||
      __builtin_mul_overflow(static_cast<std::int64_t>(tokens), price.pico(), &result)) {
    throw ConfigError("charge overflows the money range");
  }
  return Money::from_pico(result);
}

CostModel CostModel::per_million(double llm_in, double llm_out, double slm_in, double slm_out) {
  CostModel cm{Money::per_million_tokens(llm_in), Money::per_million_tokens(llm_out),
               Money::per_million_tokens(slm_in), Money::per_million_tokens(slm_out)};
  cm.validate();
  return cm;
}

void CostModel::validate() const {
  const Money zero{};
  if (llm_in < zero || llm_out < zero || slm_in < zero || slm_out < zero) {
    throw ConfigError("token prices must be non-negative");
  }
}

CostModel hosted_llama70b_pricing() { return CostModel::per_million(0.59, 0.79); }

}  // namespace shepherd
