#pragma once

#include <random>
#include <vector>

#include "bfactory/rational.hpp"

namespace bfactory::test_support {

inline Rational random_unit_rational(std::mt19937_64& rng, std::uint32_t max_den = 64) {
  std::uint32_t den = 1 + static_cast<std::uint32_t>(rng() % max_den);
  return Rational(static_cast<long>(rng() % (den + 1)), static_cast<long>(den));
}

inline RationalVector random_unit_vector(std::mt19937_64& rng, std::size_t n, std::uint32_t max_den = 64) {
  RationalVector p(n);
  for (auto& x : p) x = random_unit_rational(rng, max_den);
  return p;
}

// Random point of conv(vertices); some weights are zero so lower faces are hit too.
inline RationalVector random_hull_point(std::mt19937_64& rng, const std::vector<RationalVector>& vertices) {
  std::vector<Rational> w(vertices.size());
  Rational total = 0;
  for (auto& x : w) {
    x = rng() % 4 == 0 ? Rational(0) : Rational(1 + static_cast<long>(rng() % 40));
    total += x;
  }
  if (total == 0) {
    w[0] = 1;
    total = 1;
  }
  RationalVector p(vertices.front().size(), Rational(0));
  for (std::size_t v = 0; v < vertices.size(); ++v)
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += w[v] / total * vertices[v][i];
  return p;
}

// P[Binomial(t, q) = j], computed from scratch.
inline Rational binomial_pmf(std::uint32_t t, std::uint32_t j, const Rational& q) {
  Rational c = 1;
  for (std::uint32_t i = 0; i < j; ++i) c = c * (t - i) / (i + 1);
  Rational out = c;
  for (std::uint32_t i = 0; i < j; ++i) out *= q;
  for (std::uint32_t i = j; i < t; ++i) out *= 1 - q;
  return out;
}

}  // namespace bfactory::test_support
