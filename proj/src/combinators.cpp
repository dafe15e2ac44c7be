#include "bfactory/combinators.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>

namespace bfactory {

Program const_program(const Rational& c) {
  if (!in_unit_interval(c)) throw UsageError("constant " + to_string(c) + " outside [0,1]");
  if (c == 0) return Program::finite(FiniteTree::leaf(false));
  if (c == 1) return Program::finite(FiniteTree::leaf(true));
  return Program::finite(FiniteTree::bias(c, FiniteTree::leaf(false), FiniteTree::leaf(true)));
}

Program coin_program(std::size_t coin) {
  return Program::finite(FiniteTree::coin(coin, FiniteTree::leaf(false), FiniteTree::leaf(true)));
}

Program complement(const Program& a) {
  if (const auto* tree = a.tree()) return Program::finite(tree->complemented());
  return Program::procedural(
      a.arity(), [a](CoinSource& source) { return !a.sample(source); }, "complement(" + a.name() + ")");
}

Program product(const Program& a, const Program& b) {
  if (a.tree() && b.tree()) return Program::finite(a.tree()->graft_on_ones(*b.tree()));
  return Program::procedural(
      std::max(a.arity(), b.arity()),
      [a, b](CoinSource& source) { return a.sample(source) && b.sample(source); },
      "product(" + a.name() + ", " + b.name() + ")");
}

// ---------------------------------------------------------------------------

WeightedMixture WeightedMixture::finite(std::vector<Rational> weights, std::vector<Program> programs) {
  if (weights.size() != programs.size()) throw UsageError("mixture needs one weight per program");
  Rational total = 0;
  for (const auto& w : weights) {
    if (w < 0) throw UsageError("mixture weight " + to_string(w) + " is negative");
    total += w;
  }
  if (total > 1) throw UsageError("mixture weights sum to " + to_string(total) + " > 1");
  WeightedMixture m;
  m.weights_ = std::move(weights);
  m.programs_ = std::move(programs);
  for (const auto& p : m.programs_) m.arity_ = std::max(m.arity_, p.arity());
  return m;
}

WeightedMixture WeightedMixture::geometric(std::size_t arity, LevelGenerator generator) {
  if (!generator) throw UsageError("geometric mixture needs a level generator");
  WeightedMixture m;
  m.arity_ = arity;
  m.generator_ = std::move(generator);
  return m;
}

Rational WeightedMixture::geometric_weight(std::size_t level) {
  if (level == 0) throw UsageError("geometric levels start at 1");
  return Rational(1, 4) * pow(Rational(3, 4), static_cast<unsigned>(level - 1));
}

std::size_t sample_geometric_level(CoinSource& source) {
  static const Bias quarter(Rational(1, 4));
  std::size_t k = 1;
  while (!source.flip_known(quarter)) ++k;
  return k;
}

namespace {

// Selects programs[i] with conditional probability w_i / (remaining mass), as a finite tree.
FiniteTree mixture_tree(const std::vector<Rational>& weights, const std::vector<Program>& programs,
                        std::size_t from, const Rational& remaining) {
  if (from == weights.size() || remaining == 0) return FiniteTree::leaf(false);
  const Rational& w = weights[from];
  if (w == 0) return mixture_tree(weights, programs, from + 1, remaining);
  const FiniteTree& chosen = *programs[from].tree();
  Rational conditional = w / remaining;
  if (conditional == 1) return chosen;
  return FiniteTree::bias(conditional, mixture_tree(weights, programs, from + 1, remaining - w), chosen);
}

}  // namespace

Program convex_mix(const WeightedMixture& mixture) {
  if (mixture.is_geometric()) {
    // Generated programs are cached so repeated runs reuse each level's construction.
    struct Cache {
      std::mutex mutex;
      std::vector<std::shared_ptr<const Program>> levels;
    };
    auto cache = std::make_shared<Cache>();
    auto generator = mixture.generator();
    return Program::procedural(
        mixture.arity(),
        [cache, generator](CoinSource& source) {
          std::size_t k = sample_geometric_level(source);
          std::shared_ptr<const Program> program;
          {
            std::lock_guard lock(cache->mutex);
            if (cache->levels.size() < k) cache->levels.resize(k);
            if (!cache->levels[k - 1]) cache->levels[k - 1] = std::make_shared<const Program>(generator(k));
            program = cache->levels[k - 1];
          }
          return program->sample(source);
        },
        "geometric-mixture");
  }

  const auto& weights = mixture.weights();
  const auto& programs = mixture.programs();
  bool all_finite = std::all_of(programs.begin(), programs.end(), [](const Program& p) { return p.tree(); });
  if (all_finite) return Program::finite(mixture_tree(weights, programs, 0, Rational(1)));

  // Sequential selection with exact conditional helper coins.
  std::vector<Bias> conditionals;
  Rational remaining = 1;
  for (const auto& w : weights) {
    Rational c = remaining == 0 ? Rational(0) : w / remaining;
    conditionals.emplace_back(c);
    remaining -= w;
  }
  return Program::procedural(
      mixture.arity(),
      [conditionals, programs](CoinSource& source) {
        for (std::size_t i = 0; i < programs.size(); ++i) {
          const Bias& c = conditionals[i];
          if (c.is_zero()) continue;
          if (c.is_one() || source.flip_known(c)) return programs[i].sample(source);
        }
        return false;
      },
      "mixture");
}

// ---------------------------------------------------------------------------

BernoulliRace::BernoulliRace(std::vector<Program> programs) : programs_(std::move(programs)) {
  if (programs_.empty()) throw UsageError("a Bernoulli race needs at least one program");
  for (const auto& p : programs_) arity_ = std::max(arity_, p.arity());
}

RaceResult BernoulliRace::sample(CoinSource& source) const {
  for (std::uint64_t round = 1;; ++round) {
    std::size_t i = programs_.size() == 1 ? 0 : uniform_index(source, programs_.size());
    if (programs_[i].sample(source)) return RaceResult{i, round};
  }
}

BernoulliRace bernoulli_race(std::vector<Program> programs) { return BernoulliRace(std::move(programs)); }

RaceOutcome run_race(const BernoulliRace& race, CoinSource& source, const FlipBudget& budget) {
  if (race.arity() > source.num_coins()) throw UsageError("race references more coins than available");
  MeteredSource metered(source, budget);
  std::uint64_t rounds = 0;
  try {
    for (;;) {
      ++rounds;
      std::size_t i = race.size() == 1 ? 0 : uniform_index(metered, race.size());
      if (race.programs()[i].sample(metered)) return RaceOutcome{i, rounds, metered.flips_used()};
    }
  } catch (const BudgetExhaustedSignal& signal) {
    return RaceOutcome{std::nullopt, rounds, signal.flips_used};
  }
}

Program ratio_retry(std::size_t coin_i, std::size_t coin_j) {
  static const Bias half(Rational(1, 2));
  return Program::procedural(
      std::max(coin_i, coin_j) + 1,
      [coin_i, coin_j](CoinSource& source) {
        for (;;) {
          bool pick_j = source.flip_known(half);
          if (source.flip(pick_j ? coin_j : coin_i)) return !pick_j;
        }
      },
      "ratio-retry");
}

}  // namespace bfactory
