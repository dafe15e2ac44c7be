#include "bfactory/sampford.hpp"

#include <numeric>

namespace bfactory {

std::vector<Subset> k_subsets(std::size_t n, std::size_t k) {
  if (k > n) throw UsageError("k-subsets need k <= n");
  std::vector<Subset> out;
  Subset idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (;;) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return out;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::string subset_label(const Subset& subset) {
  std::string s = "{";
  for (std::size_t i = 0; i < subset.size(); ++i) s += (i ? "," : "") + std::to_string(subset[i] + 1);
  return s + "}";
}

RationalVector indicator(std::size_t n, const Subset& subset) {
  RationalVector e(n, Rational(0));
  for (auto i : subset) e.at(i) = 1;
  return e;
}

namespace {

void check_k(std::size_t n, std::size_t k) {
  if (k < 1 || k >= n) throw UsageError("Sampford sampling needs 1 <= k < n");
}

void check_subset(std::size_t n, const Subset& subset) {
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] >= n) throw UsageError("subset index out of range");
    if (i > 0 && subset[i] <= subset[i - 1]) throw UsageError("subset must be strictly increasing");
  }
}

// One pass over the coins; the set of heads when there are exactly k of them.
std::optional<Subset> one_pass(CoinSource& source, std::size_t k) {
  Subset heads;
  for (std::size_t i = 0; i < source.num_coins(); ++i)
    if (source.flip(i)) heads.push_back(i);
  if (heads.size() != k) return std::nullopt;
  return heads;
}

}  // namespace

SubsetOutcome classic_sampford(CoinSource& source, std::size_t k, const FlipBudget& budget) {
  const std::size_t n = source.num_coins();
  check_k(n, k);
  MeteredSource metered(source, budget);
  SubsetOutcome out;
  try {
    for (;;) {
      auto heads = one_pass(metered, k);
      if (!heads) continue;
      Subset outside;
      for (std::size_t i = 0, j = 0; i < n; ++i) {
        if (j < heads->size() && (*heads)[j] == i) ++j;
        else outside.push_back(i);
      }
      if (metered.flip(outside[uniform_index(metered, outside.size())])) {
        out.subset = std::move(heads);
        break;
      }
    }
  } catch (const BudgetExhaustedSignal&) {
  }
  out.flips_used = metered.flips_used();
  return out;
}

SubsetOutcome naive_sampford(CoinSource& source, std::size_t k, const FlipBudget& budget) {
  check_k(source.num_coins(), k);
  MeteredSource metered(source, budget);
  SubsetOutcome out;
  try {
    while (!(out.subset = one_pass(metered, k))) {
    }
  } catch (const BudgetExhaustedSignal&) {
  }
  out.flips_used = metered.flips_used();
  return out;
}

Rational g_U(const RationalVector& p, const Subset& subset) {
  const std::size_t n = p.size(), k = subset.size();
  check_k(n, k);
  check_subset(n, subset);
  Rational inside = 1, outside = 1, mass = 0;
  for (std::size_t i = 0, j = 0; i < n; ++i) {
    if (j < k && subset[j] == i) {
      inside *= p[i];
      ++j;
    } else {
      outside *= 1 - p[i];
      mass += p[i];
    }
  }
  return inside * outside * mass / static_cast<long>(n - k);
}

Rational f_U(const RationalVector& p, const Subset& subset) {
  Rational total = 0;
  for (const auto& v : k_subsets(p.size(), subset.size())) total += g_U(p, v);
  if (total == 0) throw DomainError("f_U is undefined at " + to_string(p) + ": every g_V vanishes");
  return g_U(p, subset) / total;
}

Rational fbar_U(const RationalVector& p, const Subset& subset) {
  const std::size_t n = p.size(), k = subset.size();
  check_k(n, k);
  check_subset(n, subset);
  if (!in_unit_cube(p)) throw DomainError(to_string(p) + " is outside [0,1]^n");
  Rational sum = 0;
  for (const auto& x : p) sum += x;
  if (sum != static_cast<long>(k)) throw DomainError("fbar_U needs sum p_i = k, got " + to_string(sum));
  if (std::all_of(p.begin(), p.end(), [](const Rational& x) { return x == 0 || x == 1; }))
    return p == indicator(n, subset) ? Rational(1) : Rational(0);
  return f_U(p, subset);
}

Rational naive_U(const RationalVector& p, const Subset& subset) {
  const std::size_t n = p.size(), k = subset.size();
  check_k(n, k);
  auto weight = [&](const Subset& s) {
    Rational w = 1;
    for (std::size_t i = 0, j = 0; i < n; ++i) {
      if (j < s.size() && s[j] == i) {
        w *= p[i];
        ++j;
      } else {
        w *= 1 - p[i];
      }
    }
    return w;
  };
  Rational total = 0;
  for (const auto& v : k_subsets(n, k)) total += weight(v);
  if (total == 0) throw DomainError("the naive sampler never accepts at " + to_string(p));
  return weight(subset) / total;
}

BoundCertificate sampford_bound_cert(std::size_t n, std::size_t k) {
  check_k(n, k);
  Integer denom = Integer(static_cast<long>((n - k) * k)) * binomial(static_cast<unsigned>(n), static_cast<unsigned>(k));
  return BoundCertificate(Rational(Integer(1), denom), 1);
}

TargetFunction fbar_function(std::size_t n, const Subset& subset) {
  check_k(n, subset.size());
  check_subset(n, subset);
  return TargetFunction{n, [subset](const RationalVector& p) { return fbar_U(p, subset); },
                        "fbar" + subset_label(subset)};
}

BoundarySampford::BoundarySampford(std::size_t n, std::size_t k, const LevelSchedule& schedule, const Rational& eps,
                                   ValidityPolicy policy, std::uint64_t work_limit)
    : n_(n), k_(k), subsets_(k_subsets(n, k)) {
  check_k(n, k);
  auto domain = AffineCubeDomain::k_subset(n, k);
  std::vector<Program> programs;
  for (const auto& u : subsets_) {
    auto engine = subdomain_engine(fbar_function(n, u), domain, schedule, eps, policy, work_limit);
    programs.push_back(engine_program(engine, "fbar" + subset_label(u)));
    engines_.push_back(std::move(engine));
  }
  race_.emplace(std::move(programs));
}

SubsetOutcome BoundarySampford::run(CoinSource& source, const FlipBudget& budget) const {
  if (source.num_coins() != n_) throw UsageError("coin count does not match the sampler");
  RaceOutcome r = run_race(*race_, source, budget);
  SubsetOutcome out;
  out.flips_used = r.flips_used;
  if (r.index) out.subset = subsets_[*r.index];
  return out;
}

}  // namespace bfactory
