#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "bfactory/factory.hpp"

namespace bfactory {

/// Output probability c for every p. 0 and 1 are leaves; anything else is one helper flip.
Program const_program(const Rational& c);

/// A single flip of input coin `coin` (0-based).
Program coin_program(std::size_t coin);

/// 1 - f_a(p).
Program complement(const Program& a);

/// f_a(p) * f_b(p), by running both independently and returning their conjunction.
Program product(const Program& a, const Program& b);

/// A convex combination of factories. Finite weights may sum to less than 1
/// (the deficit outputs 0); the geometric family puts weight (1/4)(3/4)^(k-1)
/// on level k = 1, 2, ... and sums to exactly 1.
class WeightedMixture {
 public:
  using LevelGenerator = std::function<Program(std::size_t level)>;

  static WeightedMixture finite(std::vector<Rational> weights, std::vector<Program> programs);
  static WeightedMixture geometric(std::size_t arity, LevelGenerator generator);

  bool is_geometric() const { return static_cast<bool>(generator_); }
  const std::vector<Rational>& weights() const { return weights_; }
  const std::vector<Program>& programs() const { return programs_; }
  const LevelGenerator& generator() const { return generator_; }
  std::size_t arity() const { return arity_; }

  /// (1/4)(3/4)^(k-1).
  static Rational geometric_weight(std::size_t level);

 private:
  std::vector<Rational> weights_;
  std::vector<Program> programs_;
  LevelGenerator generator_;
  std::size_t arity_ = 0;
};

Program convex_mix(const WeightedMixture& mixture);

/// Samples K with P[K = k] = (1/4)(3/4)^(k-1) by counting Bernoulli(1/4) helper flips.
std::size_t sample_geometric_level(CoinSource& source);

struct RaceResult {
  std::size_t index;
  std::uint64_t rounds;
};

/// Returns index i with probability f_i(p) / sum_j f_j(p): pick i uniformly,
/// run program i, accept on 1, retry on 0.
class BernoulliRace {
 public:
  explicit BernoulliRace(std::vector<Program> programs);

  std::size_t size() const { return programs_.size(); }
  std::size_t arity() const { return arity_; }
  const std::vector<Program>& programs() const { return programs_; }

  RaceResult sample(CoinSource& source) const;

 private:
  std::vector<Program> programs_;
  std::size_t arity_ = 0;
};

BernoulliRace bernoulli_race(std::vector<Program> programs);

/// p_i / (p_i + p_j): pick one of the two coins uniformly and flip it; a 1 on
/// coin i outputs 1, a 1 on coin j outputs 0, a 0 retries.
Program ratio_retry(std::size_t coin_i, std::size_t coin_j);

/// Race outcome as a run: the chosen index, or budget exhaustion.
struct RaceOutcome {
  std::optional<std::size_t> index;
  std::uint64_t rounds = 0;
  std::uint64_t flips_used = 0;
};

RaceOutcome run_race(const BernoulliRace& race, CoinSource& source, const FlipBudget& budget);

}  // namespace bfactory
