#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bfactory/rational.hpp"

namespace bfactory {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the independent stream used by trial `trial` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial);

/// An exact rational probability prepared for repeated Bernoulli draws.
///
/// A draw compares a uniform 64-bit word against the leading 64 bits of the
/// binary expansion of the bias and only consumes further words on a tie, so
/// every draw is exactly Bernoulli(bias).
class Bias {
 public:
  Bias() : Bias(Rational(0)) {}
  explicit Bias(Rational value);

  const Rational& value() const { return value_; }
  bool is_zero() const { return kind_ == Kind::kZero; }
  bool is_one() const { return kind_ == Kind::kOne; }

  bool draw(Engine& rng) const;

 private:
  enum class Kind : std::uint8_t { kZero, kOne, kSmall, kLarge };

  bool draw_large(Engine& rng) const;

  Rational value_;
  Kind kind_ = Kind::kZero;
  // kSmall: value = num_ / den_ with den_ < 2^64; threshold_ = floor(value * 2^64).
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
  std::uint64_t threshold_ = 0;
  std::uint64_t remainder_ = 0;
};

/// Everything a factory may do: flip an input coin of unknown bias, or a helper coin of known bias.
class CoinSource {
 public:
  virtual ~CoinSource() = default;
  virtual std::size_t num_coins() const = 0;
  virtual bool flip(std::size_t coin) = 0;
  virtual bool flip_known(const Bias& bias) = 0;
};

/// The simulated coins: hidden biases, a seeded stream and per-coin flip counters.
class CoinBank final : public CoinSource {
 public:
  CoinBank(RationalVector biases, std::uint64_t seed);

  static CoinBank for_trial(const RationalVector& biases, std::uint64_t seed, std::uint64_t trial);

  std::size_t num_coins() const override { return biases_.size(); }

  /// Flips input coin `coin` (0-based). Throws UsageError when out of range.
  bool flip(std::size_t coin) override;

  /// Draws a helper coin of known bias in (0,1) from the bank's stream.
  bool flip_known(const Bias& bias) override;
  bool flip_known(const Rational& bias) { return flip_known(Bias(bias)); }

  std::uint64_t seed() const { return seed_; }
  std::span<const std::uint64_t> flip_counts() const { return flip_counts_; }
  std::uint64_t helper_flips() const { return helper_flips_; }
  std::uint64_t input_flips() const;
  std::uint64_t total_flips() const { return input_flips() + helper_flips_; }

 private:
  std::vector<Bias> biases_;
  std::uint64_t seed_;
  Engine rng_;
  std::vector<std::uint64_t> flip_counts_;
  std::uint64_t helper_flips_ = 0;
};

/// Cap on the number of flips (input and helper) a single run may perform.
class FlipBudget {
 public:
  FlipBudget() = default;
  explicit FlipBudget(std::uint64_t max_flips);

  static FlipBudget unbounded() { return FlipBudget(); }

  bool bounded() const { return max_.has_value(); }
  std::uint64_t max_flips() const { return max_.value_or(std::numeric_limits<std::uint64_t>::max()); }

 private:
  std::optional<std::uint64_t> max_;
};

/// Thrown by MeteredSource when the next flip would exceed the budget.
struct BudgetExhaustedSignal {
  std::uint64_t flips_used;
};

/// Forwards to another source while charging every flip against a budget.
class MeteredSource final : public CoinSource {
 public:
  MeteredSource(CoinSource& inner, FlipBudget budget) : inner_(inner), budget_(budget) {}

  std::size_t num_coins() const override { return inner_.num_coins(); }
  bool flip(std::size_t coin) override;
  bool flip_known(const Bias& bias) override;

  std::uint64_t flips_used() const { return used_; }

 private:
  void charge();

  CoinSource& inner_;
  FlipBudget budget_;
  std::uint64_t used_ = 0;
};

/// Exactly uniform index in [0, k) using known-bias helper flips only.
std::size_t uniform_index(CoinSource& source, std::size_t k);

/// Parses `{"p": ["1/2", "1/3", 1]}`.
RationalVector parse_bias_json(std::string_view json_text);

}  // namespace bfactory
