#include "bfactory/rational.hpp"

#include <algorithm>
#include <cctype>

namespace bfactory {

namespace {

Integer parse_integer(std::string_view text, std::string_view whole) {
  if (text.empty()) throw UsageError("empty integer in rational '" + std::string(whole) + "'");
  std::size_t start = (text.front() == '-' || text.front() == '+') ? 1 : 0;
  if (start == text.size()) throw UsageError("malformed rational '" + std::string(whole) + "'");
  for (std::size_t i = start; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i])))
      throw UsageError("malformed rational '" + std::string(whole) + "'");
  }
  return Integer(std::string(text));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = text;
  text = trim(text);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer num = parse_integer(trim(text.substr(0, slash)), whole);
    Integer den = parse_integer(trim(text.substr(slash + 1)), whole);
    if (den == 0) throw UsageError("zero denominator in '" + std::string(whole) + "'");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    bool negative = !int_part.empty() && int_part.front() == '-';
    if (int_part.empty() || int_part == "-" || int_part == "+") int_part = "0";
    if (frac_part.empty()) return Rational(parse_integer(int_part, whole));
    Integer scale = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(frac_part.size()));
    Integer whole_part = parse_integer(int_part, whole);
    Integer frac = parse_integer(frac_part, whole);
    if (frac < 0) throw UsageError("malformed rational '" + std::string(whole) + "'");
    Rational magnitude = Rational(boost::multiprecision::abs(whole_part)) + Rational(frac, scale);
    return negative ? -magnitude : magnitude;
  }
  return Rational(parse_integer(text, whole));
}

std::string to_string(const Rational& value) {
  if (denominator(value) == 1) return numerator(value).str();
  return numerator(value).str() + "/" + denominator(value).str();
}

std::string to_string(const RationalVector& values) {
  std::string out = "(";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += to_string(values[i]);
  }
  return out + ")";
}

Rational pow(const Rational& base, unsigned exponent) {
  return Rational(boost::multiprecision::pow(numerator(base), exponent),
                  boost::multiprecision::pow(denominator(base), exponent));
}

Integer binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  Integer result = 1;
  for (unsigned i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

bool in_unit_cube(const RationalVector& x) {
  return std::all_of(x.begin(), x.end(), [](const Rational& v) { return in_unit_interval(v); });
}

Integer common_denominator(const RationalVector& x) {
  Integer d = 1;
  for (const auto& v : x) d = boost::multiprecision::lcm(d, denominator(v));
  return d;
}

double to_double(const Rational& x) { return x.convert_to<double>(); }

namespace {

// floor(log2(|x|)) for x != 0.
long floor_log2(const Rational& x) {
  Integer num = boost::multiprecision::abs(numerator(x));
  Integer den = denominator(x);
  long e = static_cast<long>(boost::multiprecision::msb(num)) -
           static_cast<long>(boost::multiprecision::msb(den));
  // Correct by one when the mantissa ratio is below 1.
  Rational scaled = e >= 0 ? Rational(num, den << static_cast<unsigned>(e))
                           : Rational(num << static_cast<unsigned>(-e), den);
  if (scaled < 1) --e;
  return e;
}

Rational round_dyadic(const Rational& x, unsigned bits, bool up) {
  if (x == 0) return x;
  long shift = static_cast<long>(bits) - 1 - floor_log2(x);
  Rational scaled = shift >= 0 ? x * Rational(Integer(1) << static_cast<unsigned>(shift))
                               : x / Rational(Integer(1) << static_cast<unsigned>(-shift));
  Integer q = numerator(scaled) / denominator(scaled);  // truncates toward zero
  Rational qr(q);
  if (up && qr < scaled) q += 1;
  if (!up && qr > scaled) q -= 1;
  Rational out(q);
  return shift >= 0 ? out / Rational(Integer(1) << static_cast<unsigned>(shift))
                    : out * Rational(Integer(1) << static_cast<unsigned>(-shift));
}

}  // namespace

Rational round_up(const Rational& x, unsigned bits) { return round_dyadic(x, bits, true); }
Rational round_down(const Rational& x, unsigned bits) { return round_dyadic(x, bits, false); }

bool RationalVectorLess::operator()(const RationalVector& a, const RationalVector& b) const {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace bfactory
