#pragma once

#include <cstdint>

#include "bfactory/rational.hpp"

namespace bfactory {

/// Closed rational interval [lo, hi].
struct Interval {
  Rational lo;
  Rational hi;
};

/// Rigorous enclosure of ln(x) for rational x > 0.
Interval log_interval(const Rational& x);

/// Rational upper bound of exp(x) for x <= 0, rounded up to 64 significant bits.
Rational exp_upper(const Rational& x);

/// Upper bound of 2n exp(-2 delta^2 t), the union of n two-sided Hoeffding tails.
Rational hoeffding_bound(const Rational& delta, std::uint64_t t, std::uint64_t n);

/// Upper bound of the Chernoff (relative-entropy) tail P[mean of t flips - p >= delta]:
/// ((p/(p+d))^(p+d) ((1-p)/(1-p-d))^(1-p-d))^t, with the p+d = 1 factor taken as 1.
Rational chernoff_bound(const Rational& p, const Rational& delta, std::uint64_t t);

}  // namespace bfactory
