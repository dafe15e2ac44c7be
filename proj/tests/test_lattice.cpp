#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "bfactory/bounds.hpp"
#include "bfactory/engine.hpp"
#include "bfactory/harness.hpp"
#include "bfactory/lattice.hpp"
#include "support.hpp"

using namespace bfactory;
using test_support::binomial_pmf;

namespace {

// Independent one-coin recursion with constant t, memoized by (level, point).
class OneCoinOracle {
 public:
  OneCoinOracle(std::function<Rational(const Rational&)> f, std::uint32_t t) : f_(std::move(f)), t_(t) {}

  Rational f(std::size_t k, const Rational& q) {
    if (k == 1) return f_(q);
    auto key = std::make_pair(k, q);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Rational v = (4 * f(k - 1, q) - g(k - 1, q)) / 3;
    memo_.emplace(key, v);
    return v;
  }

  Rational g(std::size_t k, const Rational& q) {
    Rational total = 0;
    for (std::uint32_t j = 0; j <= t_; ++j)
      if (f(k, Rational(j, t_)) >= Rational(1, 2)) total += binomial_pmf(t_, j, q);
    return total;
  }

 private:
  std::function<Rational(const Rational&)> f_;
  std::uint32_t t_;
  std::map<std::pair<std::size_t, Rational>, Rational> memo_;
};

}  // namespace

TEST(LevelSchedule, PrefixThenTail) {
  LevelSchedule s({4, 8}, 16, 10);
  EXPECT_EQ(s.t(1), 4u);
  EXPECT_EQ(s.t(2), 8u);
  EXPECT_EQ(s.t(3), 16u);
  EXPECT_EQ(s.t(10), 16u);
  EXPECT_EQ(s.distinct(), (std::vector<std::uint32_t>{4, 8, 16}));
  EXPECT_THROW(s.t(0), UsageError);
  EXPECT_THROW(LevelSchedule::constant(0), UsageError);
}

TEST(Grid, PointsAndLatticeSize) {
  auto g = grid_points(2, 2);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g.front(), (RationalVector{Rational(0), Rational(0)}));
  EXPECT_EQ(g[1], (RationalVector{Rational(0), Rational(1, 2)}));
  EXPECT_EQ(lattice_size(3, 4), 125u);
  EXPECT_THROW(lattice_size(10, 100, 1000), ResourceError);
}

TEST(TargetFunctions, BuiltinsAndPolynomials) {
  RationalVector p{Rational(1, 3)};
  EXPECT_EQ(builtin_function("affine-quarter")(p), Rational(5, 12));
  EXPECT_EQ(builtin_function("cubic")(p), Rational(2, 27));
  EXPECT_EQ(builtin_function("const:2/7")(p), Rational(2, 7));
  EXPECT_EQ(complement(builtin_function("square"))(p), Rational(8, 9));
  EXPECT_THROW(builtin_function("ratio", 2)({Rational(0), Rational(0)}), DomainError);
  EXPECT_THROW(builtin_function("nope"), UsageError);
  auto poly = polynomial_from_json(parse_json(
      R"({"terms": [{"coeff": "1/4", "exponents": [0, 0]}, {"coeff": "1/2", "exponents": [1, 2]}]})"));
  EXPECT_EQ(poly.arity, 2u);
  EXPECT_EQ(poly({Rational(1, 2), Rational(1, 3)}), Rational(1, 4) + Rational(1, 36));
  // A polynomial leaving [0,1] is rejected when an engine is built on it.
  auto bad = polynomial_from_json(parse_json(R"({"terms": [{"coeff": "2", "exponents": [0]}]})"));
  EXPECT_THROW(cube_engine(bad, LevelSchedule::constant(4), ValidityPolicy::kStrict)->ensure_level(1),
               UsageError);
}

TEST(GkEval, MatchesBinomialSum) {
  auto level = [](const LatticePoint& x) { return x.values()[0]; };
  for (const Rational& q : {Rational(0), Rational(1, 3), Rational(1, 2), Rational(1)}) {
    Rational expect = 0;
    for (std::uint32_t j = 0; j <= 9; ++j)
      if (Rational(j, 9) >= Rational(1, 2)) expect += binomial_pmf(9, j, q);
    EXPECT_EQ(gk_eval(level, {q}, 9), expect);
  }
}

TEST(LevelOracle, AgreesWithIndependentRecursion) {
  const std::uint32_t t = 12;
  LevelOracle oracle(builtin_function("affine-quarter"), LevelSchedule::constant(t, 8));
  OneCoinOracle reference([](const Rational& q) { return (1 + 2 * q) / 4; }, t);
  for (const auto& q : grid_points(1, 8)) {
    for (std::size_t k = 1; k <= 6; ++k) {
      EXPECT_EQ(oracle.fk(k, q), reference.f(k, q[0])) << "k=" << k << " q=" << to_string(q);
      EXPECT_EQ(oracle.gk(k, q), reference.g(k, q[0]));
    }
  }
  EXPECT_EQ(fk_eval(3, {Rational(1, 5)}, LevelSchedule::constant(t, 8), builtin_function("affine-quarter")),
            reference.f(3, Rational(1, 5)));
}

// Invariant: f - S_k = (3/4)^k f_{k+1}, so the partial sums converge monotonically.
TEST(LevelOracle, PartialSumIdentity) {
  LevelOracle oracle(builtin_function("cubic"), LevelSchedule::constant(16, 8));
  for (const auto& q : grid_points(1, 8)) {
    Rational f = oracle.target()(q);
    for (std::size_t k = 1; k <= 5; ++k)
      EXPECT_EQ(f - oracle.partial_sum(k, q), pow(Rational(3, 4), static_cast<unsigned>(k)) * oracle.fk(k + 1, q));
  }
}

TEST(Bounds, LogEnclosureIsTightAndCorrect) {
  for (double x : {0.001, 0.5, 1.0, 2.0, 8.0, 24.0, 1e6}) {
    Rational r(static_cast<long>(std::llround(x * 1000)), 1000);
    auto iv = log_interval(r);
    double v = std::log(to_double(r));
    EXPECT_LE(to_double(iv.lo), v + 1e-12);
    EXPECT_GE(to_double(iv.hi), v - 1e-12);
    EXPECT_LT(to_double(iv.hi - iv.lo), 1e-9);
  }
  EXPECT_EQ(log_interval(Rational(1)).lo, 0);
  EXPECT_THROW(log_interval(Rational(0)), UsageError);
}

TEST(Bounds, ExpUpperDominates) {
  for (double x : {0.0, -0.25, -1.0, -7.5, -40.0}) {
    Rational r(static_cast<long>(x * 4), 4);
    Rational e = exp_upper(r);
    EXPECT_GE(to_double(e), std::exp(to_double(r)) * (1 - 1e-15));
    EXPECT_LE(to_double(e), std::exp(to_double(r)) * (1 + 1e-12));
  }
}

// Oracle: the exact binomial tail from the pmf.
TEST(Bounds, HoeffdingAndChernoffDominateExactTails) {
  for (std::uint32_t t : {5u, 20u, 60u}) {
    for (const Rational& p : {Rational(1, 10), Rational(1, 2), Rational(3, 4)}) {
      for (const Rational& d : {Rational(1, 10), Rational(1, 4)}) {
        Rational two_sided = 0, upper = 0;
        for (std::uint32_t j = 0; j <= t; ++j) {
          Rational dev = Rational(j, t) - p;
          Rational w = binomial_pmf(t, j, p);
          if (dev >= d || -dev >= d) two_sided += w;
          if (dev >= d) upper += w;
        }
        EXPECT_LE(two_sided, hoeffding_bound(d, t, 1));
        if (p + d <= 1) EXPECT_LE(upper, chernoff_bound(p, d, t));
      }
    }
  }
}

TEST(CertificateCheck, HoldsForAffineAndFailsForAStep) {
  auto report = certificate_check(builtin_function("affine-quarter"), 64, 16);
  EXPECT_TRUE(report.holds);
  EXPECT_EQ(report.points_checked, 17u);
  TargetFunction step{1, [](const RationalVector& x) { return x[0] >= Rational(1, 2) ? Rational(1, 2) : Rational(1, 100); },
                      "step"};
  auto bad = certificate_check(step, 64, 16);
  EXPECT_FALSE(bad.holds);
  EXPECT_LT(bad.worst_margin, 0);
}

// ---------------------------------------------------------------------------
// The precomputed engine behind general_factory.

TEST(LevelEngine, ValuesMatchTheRecursiveOracle) {
  const std::uint32_t t = 10;
  auto f = builtin_function("cubic");
  auto engine = cube_engine(f, LevelSchedule::constant(t, 12), ValidityPolicy::kRecord);
  LevelOracle oracle(f, LevelSchedule::constant(t, 12));
  for (const auto& q : grid_points(1, 5)) {
    for (std::size_t k = 1; k <= 6; ++k) {
      EXPECT_EQ(engine->value(k, q), oracle.fk(k, q));
      EXPECT_EQ(engine->g_value(k, q), oracle.gk(k, q));
    }
  }
}

TEST(LevelEngine, TwoCoinValuesMatchTheOracle) {
  TargetFunction safe{2,
                      [](const RationalVector& x) {
                        return x[0] + x[1] == 0 ? Rational(1, 2) : (x[0] + 1) / (x[0] + x[1] + 2);
                      },
                      "smooth-ratio"};
  auto engine = cube_engine(safe, LevelSchedule::constant(6, 6), ValidityPolicy::kRecord);
  LevelOracle oracle(safe, LevelSchedule::constant(6, 6));
  for (const auto& q : grid_points(2, 3))
    for (std::size_t k = 1; k <= 4; ++k) EXPECT_EQ(engine->value(k, q), oracle.fk(k, q));
}

TEST(LevelEngine, StrictPolicyStopsAtTheValidityHorizon) {
  // Bernstein reproduces affine functions exactly, so use a quadratic.
  auto f = builtin_function("square");
  auto record = cube_engine(f, LevelSchedule::constant(4, 60), ValidityPolicy::kRecord);
  record->ensure_level(60);
  const std::size_t horizon = record->first_invalid_level();
  ASSERT_GT(horizon, 0u) << "t = 4 should leave [0,1] within 60 levels";
  auto strict = cube_engine(f, LevelSchedule::constant(4, 60), ValidityPolicy::kStrict);
  // Building level k also derives f_{k+1}, the next level's target.
  EXPECT_NO_THROW(strict->ensure_level(horizon - 2));
  EXPECT_THROW(strict->ensure_level(horizon - 1), CertificateViolation);
}

TEST(GeneralFactory, FrequencyMatchesTarget) {
  auto f = builtin_function("affine-quarter");
  auto engine = cube_engine(f, LevelSchedule::constant(64), ValidityPolicy::kRecord);
  auto program = engine_program(engine, "affine");
  for (const Rational& p : {Rational(0), Rational(2, 3)}) {
    auto report = run_trials("affine", program_sampler(program), {p}, RunConfig{30000, 5, {}, 1});
    EXPECT_TRUE(within_sigmas(report.count("1"), report.completed(), f({p}), 4.0)) << to_string(p);
  }
  EXPECT_THROW(engine->value(1, {Rational(2)}), UsageError);
}

TEST(GeneralFactory, ReproducibleAcrossThreadCounts) {
  auto program = engine_program(
      cube_engine(builtin_function("cubic"), LevelSchedule::constant(16), ValidityPolicy::kRecord), "cubic");
  auto a = run_trials("c", program_sampler(program), {Rational(1, 2)}, RunConfig{3000, 8, {}, 1});
  auto b = run_trials("c", program_sampler(program), {Rational(1, 2)}, RunConfig{3000, 8, {}, 3});
  EXPECT_EQ(a.to_csv(), b.to_csv());
}
