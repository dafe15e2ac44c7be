#include "bfactory/bounds.hpp"

#include <algorithm>

namespace bfactory {

namespace {

constexpr unsigned kWorkBits = 128;
constexpr unsigned kSeriesTerms = 48;

Rational power_of_two(long e) {
  Integer one = 1;
  return e >= 0 ? Rational(one << static_cast<unsigned>(e)) : Rational(Integer(1), one << static_cast<unsigned>(-e));
}

// Lower bound of exp(y) for y > 0.
Rational exp_lower_positive(const Rational& y) {
  unsigned halvings = 0;
  Rational z = y;
  while (z > Rational(1, 2)) {
    z /= 2;
    ++halvings;
  }
  Rational sum = 1;
  Rational term = 1;
  for (unsigned j = 1; j <= kSeriesTerms; ++j) {
    term = round_down(term * z / j, kWorkBits);
    sum += term;
    sum = round_down(sum, kWorkBits);
  }
  for (unsigned i = 0; i < halvings; ++i) sum = round_down(sum * sum, kWorkBits);
  return sum;
}

// 2 atanh(z) enclosure for 0 <= z < 1/2.
Interval two_atanh(const Rational& z) {
  Rational z2 = z * z;
  Rational power = z;
  Rational sum = 0;
  unsigned j = 0;
  for (; j < kSeriesTerms; ++j) {
    sum += round_down(power / (2 * j + 1), kWorkBits);
    power = round_down(power * z2, kWorkBits);
  }
  // Remaining tail sum_{i>=j} z^(2i+1)/(2i+1) <= z^(2j+1) / ((2j+1)(1 - z^2)).
  Rational tail = pow(z, 2 * j + 1) / ((2 * j + 1) * (1 - z2));
  // Downward rounding of the partial sum lost less than 2^-100 in total.
  Rational slack = power_of_two(-100);
  return Interval{2 * sum, round_up(2 * (sum + round_up(tail, kWorkBits) + slack), kWorkBits)};
}

}  // namespace

Interval log_interval(const Rational& x) {
  if (x <= 0) throw UsageError("log of non-positive value " + to_string(x));
  if (x == 1) return Interval{0, 0};
  // x = m * 2^e with m in [1, 2).
  long e = static_cast<long>(boost::multiprecision::msb(numerator(x))) -
           static_cast<long>(boost::multiprecision::msb(denominator(x)));
  Rational m = x / power_of_two(e);
  if (m < 1) {
    m *= 2;
    --e;
  }
  Interval ln_m = two_atanh((m - 1) / (m + 1));
  if (e == 0) return ln_m;
  Interval ln2 = two_atanh(Rational(1, 3));
  if (e > 0) return Interval{ln_m.lo + e * ln2.lo, ln_m.hi + e * ln2.hi};
  return Interval{ln_m.lo + e * ln2.hi, ln_m.hi + e * ln2.lo};
}

Rational exp_upper(const Rational& x) {
  if (x > 0) throw UsageError("exp_upper is only provided for non-positive arguments");
  if (x == 0) return 1;
  return round_up(1 / exp_lower_positive(-x), 64);
}

Rational hoeffding_bound(const Rational& delta, std::uint64_t t, std::uint64_t n) {
  if (delta <= 0) throw UsageError("hoeffding_bound needs delta > 0");
  if (t == 0) throw UsageError("hoeffding_bound needs t >= 1");
  Rational exponent = -2 * delta * delta * Rational(Integer(t));
  return Rational(Integer(2) * Integer(n)) * exp_upper(exponent);
}

Rational chernoff_bound(const Rational& p, const Rational& delta, std::uint64_t t) {
  if (t == 0) throw UsageError("chernoff_bound needs t >= 1");
  if (p < 0 || delta < 0 || p + delta > 1) throw UsageError("chernoff_bound needs 0 <= p and p + delta <= 1");
  if (delta == 0) return 1;
  if (p == 0) return 0;  // the mean of 0-coins never exceeds 0
  const Rational q = p + delta;
  // Relative entropy KL(q || p); we need a lower bound to bound the tail from above.
  Interval first = log_interval(q / p);
  Rational kl_lo = q * first.lo;
  if (q < 1) {
    Interval second = log_interval((1 - q) / (1 - p));
    kl_lo += (1 - q) * second.lo;
  }
  Rational exponent = -kl_lo * Rational(Integer(t));
  if (exponent >= 0) return 1;
  return std::min(Rational(1), exp_upper(exponent));
}

}  // namespace bfactory
