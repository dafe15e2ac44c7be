#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace bfactory {

using Integer = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;
using RationalVector = std::vector<Rational>;

/// Bad input supplied by a caller (maps to CLI exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured work limit would be exceeded (maps to CLI exit code 3).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A recursion level left [0,1]: the level schedule is too coarse for the target.
class CertificateViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function was evaluated outside the set where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Parses "3/4", "-2", "7" or an exact decimal such as "0.125".
Rational parse_rational(std::string_view text);

/// "num/den", or just "num" when the denominator is 1.
std::string to_string(const Rational& value);
std::string to_string(const RationalVector& values);

Rational pow(const Rational& base, unsigned exponent);
Integer binomial(unsigned n, unsigned k);

inline bool in_unit_interval(const Rational& x) { return x >= 0 && x <= 1; }
bool in_unit_cube(const RationalVector& x);

inline Integer numerator(const Rational& x) { return boost::multiprecision::numerator(x); }
inline Integer denominator(const Rational& x) { return boost::multiprecision::denominator(x); }

/// Least common multiple of the denominators of `x`.
Integer common_denominator(const RationalVector& x);

double to_double(const Rational& x);

/// Smallest dyadic rational >= x with at most `bits` significant bits.
Rational round_up(const Rational& x, unsigned bits);
/// Largest dyadic rational <= x with at most `bits` significant bits.
Rational round_down(const Rational& x, unsigned bits);

/// Total order used for memo keys and lexicographic tie-breaking.
struct RationalVectorLess {
  bool operator()(const RationalVector& a, const RationalVector& b) const;
};

}  // namespace bfactory
