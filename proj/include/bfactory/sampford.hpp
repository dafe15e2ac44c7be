#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfactory/coin.hpp"
#include "bfactory/combinators.hpp"
#include "bfactory/faces.hpp"
#include "bfactory/subdomain.hpp"

namespace bfactory {

/// A k-subset of the coins, 0-based and ascending.
using Subset = std::vector<std::size_t>;

/// All k-subsets of [0, n) in lexicographic order.
std::vector<Subset> k_subsets(std::size_t n, std::size_t k);

/// "{1,2}" with 1-based indices.
std::string subset_label(const Subset& subset);

/// Indicator vector e_U.
RationalVector indicator(std::size_t n, const Subset& subset);

struct SubsetOutcome {
  std::optional<Subset> subset;  // empty when the budget ran out
  std::uint64_t flips_used = 0;
};

/// Flip every coin once; retry unless exactly k came up; flip one uniformly
/// chosen coin outside the set and accept on 1.
SubsetOutcome classic_sampford(CoinSource& source, std::size_t k, const FlipBudget& budget = FlipBudget::unbounded());

/// The incorrect single-pass sampler: accept the first round with exactly k heads.
SubsetOutcome naive_sampford(CoinSource& source, std::size_t k, const FlipBudget& budget = FlipBudget::unbounded());

/// Probability that one round of the classic procedure outputs U.
Rational g_U(const RationalVector& p, const Subset& subset);

/// g_U / sum_V g_V; DomainError when the denominator vanishes.
Rational f_U(const RationalVector& p, const Subset& subset);

/// f_U extended to every p with sum p_i = k: 1 at e_U, 0 at the other vertices e_V.
Rational fbar_U(const RationalVector& p, const Subset& subset);

/// Output distribution of the naive sampler: prod_U p prod_not-U (1-p), normalized.
Rational naive_U(const RationalVector& p, const Subset& subset);

/// c = 1 / ((n-k) k C(n,k)), m = 1.
BoundCertificate sampford_bound_cert(std::size_t n, std::size_t k);

/// fbar_U as a target function on the k-subset domain.
TargetFunction fbar_function(std::size_t n, const Subset& subset);

/// Races one subdomain factory per fbar_U on {sum x_i = k}.
class BoundarySampford {
 public:
  BoundarySampford(std::size_t n, std::size_t k, const LevelSchedule& schedule, const Rational& eps,
                   ValidityPolicy policy = ValidityPolicy::kStrict,
                   std::uint64_t work_limit = kDefaultLatticeWorkLimit);

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  const std::vector<Subset>& subsets() const { return subsets_; }
  const std::vector<std::shared_ptr<LevelEngine>>& engines() const { return engines_; }

  SubsetOutcome run(CoinSource& source, const FlipBudget& budget = FlipBudget::unbounded()) const;

 private:
  std::size_t n_, k_;
  std::vector<Subset> subsets_;
  std::vector<std::shared_ptr<LevelEngine>> engines_;
  std::optional<BernoulliRace> race_;
};

}  // namespace bfactory
