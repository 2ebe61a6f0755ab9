#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace shepherd {

/// Exact fixed-point dollar amount with a resolution of 1e-12 USD.
///
/// Commercial per-token prices are quoted in dollars per million tokens with
/// at most six decimals, so a per-token price is an integral number of
/// picodollars and every charge (tokens x price) stays exact.
class Money {
 public:
  static constexpr std::int64_t kPicoPerDollar = 1'000'000'000'000;

  constexpr Money() = default;

  static constexpr Money from_pico(std::int64_t pico) { return Money(pico); }
  /// Rounds to the nearest picodollar.
  static Money from_dollars(double usd);
  /// Per-token price from a "$ per 1M tokens" quote; exact for quotes with up
  /// to six decimals.
  static Money per_million_tokens(double usd_per_million);
  /// Parses a decimal string such as "0.0000906" exactly.
  static Money parse(const std::string& decimal);

  constexpr std::int64_t pico() const { return pico_; }
  double dollars() const { return static_cast<double>(pico_) / static_cast<double>(kPicoPerDollar); }

  /// Shortest exact decimal rendering, e.g. "0.0000906" or "0".
  std::string to_string() const;

  constexpr Money& operator+=(Money o) {
    pico_ += o.pico_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    pico_ -= o.pico_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.pico_ + b.pico_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.pico_ - b.pico_); }
  friend constexpr Money operator*(Money a, std::int64_t n) { return Money(a.pico_ * n); }
  friend constexpr Money operator*(std::int64_t n, Money a) { return Money(a.pico_ * n); }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t pico) : pico_(pico) {}
  std::int64_t pico_ = 0;
};

/// Charge for `tokens` at a per-token `price`; throws on int64 overflow.
Money charge(std::size_t tokens, Money price);

/// Per-token prices of the two models.
struct CostModel {
  Money llm_in;
  Money llm_out;
  Money slm_in;
  Money slm_out;

  /// Build from "$ per 1M tokens" quotes.
  static CostModel per_million(double llm_in, double llm_out, double slm_in = 0.0, double slm_out = 0.0);

  bool slm_free() const { return slm_in == Money{} && slm_out == Money{}; }
  /// Throws ConfigError if any price is negative.
  void validate() const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

/// Llama-3.3-70B on a hosted API at $0.59 / $0.79 per 1M tokens, local SLM free.
CostModel hosted_llama70b_pricing();

}  // namespace shepherd
