#include <gtest/gtest.h>

#include <algorithm>

#include "bfactory/harness.hpp"
#include "bfactory/lp.hpp"
#include "bfactory/polytope.hpp"
#include "bfactory/subdomain.hpp"
#include "support.hpp"

using namespace bfactory;

namespace {

Rational linf(const RationalVector& a, const RationalVector& b) {
  Rational d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational e = a[i] - b[i];
    if (e < 0) e = -e;
    if (e > d) d = e;
  }
  return d;
}

// Brute force: every basis of the equality system, keep the best feasible one.
std::optional<Rational> brute_force_lp(const LinearProgram& lp) {
  const std::size_t m = lp.A.size(), n = lp.c.size();
  std::optional<Rational> best;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(m), true);
  do {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < n; ++j)
      if (pick[j]) cols.push_back(j);
    std::vector<RationalVector> B(m, RationalVector(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) B[i][k] = lp.A[i][cols[k]];
    auto xb = solve_square(B, lp.b);
    if (!xb || std::any_of(xb->begin(), xb->end(), [](const Rational& v) { return v < 0; })) continue;
    Rational value = 0;
    for (std::size_t k = 0; k < m; ++k) value += lp.c[cols[k]] * (*xb)[k];
    if (!best || value < *best) best = value;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

struct NamedDomain {
  std::string name;
  AffineCubeDomain domain;
};

std::vector<NamedDomain> test_domains() {
  return {{"cube(2)", AffineCubeDomain::cube(2)},
          {"k-subset(3,2)", AffineCubeDomain::k_subset(3, 2)},
          {"k-subset(4,1)", AffineCubeDomain::k_subset(4, 1)},
          {"segment", AffineCubeDomain(2, {{Rational(1), Rational(1)}}, {Rational(1, 2)})},
          {"tilted", AffineCubeDomain(2, {{Rational(1), Rational(2)}}, {Rational(1)})},
          {"birkhoff(2)", AffineCubeDomain::birkhoff(2)},
          {"point", AffineCubeDomain(2, {{Rational(1), Rational(0)}, {Rational(0), Rational(1)}},
                                     {Rational(1, 3), Rational(2, 3)})},
          {"birkhoff(3)", AffineCubeDomain::birkhoff(3)}};
}

}  // namespace

TEST(Lp, MatchesBasisEnumerationOnRandomBoxedPrograms) {
  std::mt19937_64 rng(1);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    // Two random equality rows over x in [0,1]^3, with slacks s_i = 1 - x_i.
    LinearProgram lp;
    for (int r = 0; r < 2; ++r) {
      RationalVector row(6, Rational(0));
      for (int j = 0; j < 3; ++j) row[j] = Rational(static_cast<long>(rng() % 5) - 2);
      lp.A.push_back(row);
      lp.b.push_back(Rational(static_cast<long>(rng() % 3)));
    }
    for (int j = 0; j < 3; ++j) {
      RationalVector row(6, Rational(0));
      row[j] = row[3 + j] = 1;
      lp.A.push_back(row);
      lp.b.push_back(1);
    }
    for (int j = 0; j < 6; ++j) lp.c.push_back(Rational(static_cast<long>(rng() % 7) - 3, 2));
    if (rank(lp.A) < lp.A.size()) continue;
    auto result = solve_lp(lp);
    auto brute = brute_force_lp(lp);
    ASSERT_EQ(result.optimal(), brute.has_value());
    if (brute) {
      ++solved;
      EXPECT_EQ(result.value, *brute);
      for (std::size_t i = 0; i < lp.A.size(); ++i) {
        Rational lhs = 0;
        for (std::size_t j = 0; j < 6; ++j) lhs += lp.A[i][j] * result.x[j];
        EXPECT_EQ(lhs, lp.b[i]);
      }
    }
  }
  EXPECT_GT(solved, 10);
}

TEST(Lp, DetectsInfeasibleAndUnbounded) {
  LinearProgram infeasible{{{Rational(1), Rational(1)}}, {Rational(-1)}, {Rational(0), Rational(0)}};
  EXPECT_EQ(solve_lp(infeasible).status, LpResult::Status::kInfeasible);
  LinearProgram unbounded{{{Rational(1), Rational(-1)}}, {Rational(0)}, {Rational(-1), Rational(0)}};
  EXPECT_EQ(solve_lp(unbounded).status, LpResult::Status::kUnbounded);
}

TEST(Lp, LinearAlgebraHelpers) {
  std::vector<RationalVector> M{{Rational(1), Rational(2), Rational(3)}, {Rational(2), Rational(4), Rational(6)}};
  EXPECT_EQ(rank(M), 1u);
  auto ns = null_space(M, 3);
  ASSERT_EQ(ns.size(), 2u);
  for (const auto& z : ns) EXPECT_EQ(z[0] + 2 * z[1] + 3 * z[2], 0);
  auto x = solve_square({{Rational(2), Rational(1)}, {Rational(1), Rational(3)}}, {Rational(3), Rational(5)});
  ASSERT_TRUE(x);
  EXPECT_EQ((*x)[0], Rational(4, 5));
  EXPECT_EQ((*x)[1], Rational(7, 5));
  EXPECT_FALSE(solve_square({{Rational(1), Rational(2)}, {Rational(2), Rational(4)}}, {Rational(1), Rational(2)}));
}

TEST(Domain, ConstructionAndJson) {
  auto k = AffineCubeDomain::k_subset(3, 2);
  EXPECT_TRUE(k.contains({Rational(1), Rational(1, 2), Rational(1, 2)}));
  EXPECT_FALSE(k.contains({Rational(1), Rational(1), Rational(1)}));
  EXPECT_EQ(k.rank(), 1u);
  auto back = AffineCubeDomain::from_json(k.to_json());
  EXPECT_EQ(back.M(), k.M());
  EXPECT_EQ(back.b(), k.b());
  EXPECT_EQ(AffineCubeDomain::birkhoff(3).rank(), 5u);
  EXPECT_THROW(AffineCubeDomain(2, {{Rational(1), Rational(1)}}, {Rational(3)}), UsageError);
  EXPECT_THROW(AffineCubeDomain::k_subset(2, 3), UsageError);
}

// Fast closed forms against the exact LP, plus an independent distance check.
TEST(Projection, ClosedFormsMatchTheLpAndAreNearest) {
  std::mt19937_64 rng(2);
  for (const auto& [name, domain] : test_domains()) {
    const auto vertices = enum_vertices(domain);
    for (int i = 0; i < 60; ++i) {
      RationalVector x = test_support::random_unit_vector(rng, domain.n(), 12);
      auto fast = linf_project(domain, x);
      auto lp = linf_project_lp(domain, x);
      EXPECT_EQ(fast.distance, lp.distance) << name << " " << to_string(x);
      EXPECT_EQ(fast.point, lp.point) << name << " " << to_string(x);
      EXPECT_TRUE(domain.contains(fast.point)) << name;
      EXPECT_EQ(linf(x, fast.point), fast.distance) << name;
      EXPECT_LE(domain.residual_bound(x), fast.distance) << name;
      for (int j = 0; j < 20; ++j) {
        auto y = test_support::random_hull_point(rng, vertices);
        EXPECT_GE(linf(x, y), fast.distance) << name;
      }
      for (const auto& v : vertices) EXPECT_GE(linf(x, v), fast.distance) << name;
      EXPECT_EQ(within_ball(domain, x, Rational(1, 8)), fast.distance < Rational(1, 8)) << name;
    }
  }
}

TEST(Projection, PointsOfKAreFixed) {
  std::mt19937_64 rng(3);
  for (const auto& [name, domain] : test_domains()) {
    const auto vertices = enum_vertices(domain);
    for (int i = 0; i < 20; ++i) {
      auto y = test_support::random_hull_point(rng, vertices);
      auto proj = linf_project(domain, y);
      EXPECT_EQ(proj.distance, 0) << name;
      EXPECT_EQ(proj.point, y) << name;
    }
  }
  EXPECT_THROW(within_ball(AffineCubeDomain::cube(1), {Rational(0)}, Rational(0)), UsageError);
}

TEST(SubdomainLattice, EntriesAreNearAndProjected) {
  const AffineCubeDomain domain = AffineCubeDomain::k_subset(3, 2);
  const Rational eps(1, 4);
  auto lat = subdomain_lattice(domain, 4, eps);
  std::size_t near = 0;
  for (const auto& x : grid_points(3, 4))
    if (linf_project_lp(domain, x).distance < eps) ++near;
  EXPECT_EQ(lat.accepted(), near);
  for (std::size_t a = 0; a < lat.accepted(); ++a) {
    RationalVector x;
    for (auto c : lat.entry(a)) x.push_back(Rational(c, 4));
    EXPECT_EQ(lat.points[lat.point_of[a]], linf_project_lp(domain, x).point);
  }
}

// Worked by hand: K = {x1 + x2 = 1}, t = 2, eps = 1/2, p = (1/2, 1/2).
// The realizations (0,0) and (1,1) are rejected, so P[accept] = 7/8.
TEST(Lemma52, HandComputedCase) {
  const AffineCubeDomain domain = AffineCubeDomain::k_subset(2, 1);
  const RationalVector p{Rational(1, 2), Rational(1, 2)};
  auto center = [](const LatticePoint& x) { return x.counts[0] == 1 && x.counts[1] == 1; };
  auto r = lemma52_check(domain, p, 2, Rational(1, 2), center);
  EXPECT_EQ(r.acceptance, Rational(7, 8));
  EXPECT_EQ(r.unconditioned, Rational(1, 4));
  EXPECT_EQ(r.conditioned, Rational(2, 7));
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(r.precondition);
  auto corner = [](const LatticePoint& x) { return x.counts[0] == 0 && x.counts[1] == 0; };
  EXPECT_EQ(lemma52_check(domain, p, 2, Rational(1, 2), corner).conditioned, 0);
}

// Property: whenever the precondition holds, domination holds for random events.
TEST(Lemma52, RandomEventsUnderThePrecondition) {
  std::mt19937_64 rng(4);
  const AffineCubeDomain domain = AffineCubeDomain::k_subset(2, 1);
  for (std::uint32_t t = 6; t <= 10; ++t) {
    for (int e = 0; e < 20; ++e) {
      Rational a = test_support::random_unit_rational(rng, 10);
      std::uint64_t salt = rng();
      auto event = [salt](const LatticePoint& x) { return (splitmix64(salt ^ (x.counts[0] * 131 + x.counts[1])) & 1) != 0; };
      auto r = lemma52_check(domain, {a, 1 - a}, t, Rational(1, 2), event);
      ASSERT_TRUE(r.precondition);
      EXPECT_TRUE(r.holds) << "t=" << t << " a=" << to_string(a);
    }
  }
}

TEST(SampleZ, LandsInKAndRespectsTheBudget) {
  const AffineCubeDomain domain = AffineCubeDomain::k_subset(3, 2);
  for (std::uint64_t i = 0; i < 200; ++i) {
    CoinBank bank = CoinBank::for_trial({Rational(2, 3), Rational(2, 3), Rational(2, 3)}, 3, i);
    auto z = sample_Z(bank, domain, 8, Rational(1, 8));
    ASSERT_TRUE(z.point);
    EXPECT_TRUE(domain.contains(*z.point));
    EXPECT_GE(z.attempts, 1u);
    EXPECT_EQ(z.flips_used, z.attempts * 24);
  }
  CoinBank bank({Rational(0), Rational(0), Rational(0)}, 1);
  auto z = sample_Z(bank, domain, 8, Rational(1, 8), FlipBudget(1000));
  EXPECT_FALSE(z.point);
  EXPECT_EQ(z.flips_used, 1000u);
}

// On the full cube there is no conditioning, so the subdomain engine is the cube engine.
TEST(SubdomainEngine, ReducesToTheCubeEngineOnTheCube) {
  auto f = builtin_function("cubic");
  auto a = subdomain_engine(f, AffineCubeDomain::cube(1), LevelSchedule::constant(8, 10), Rational(1, 4),
                            ValidityPolicy::kRecord);
  auto b = cube_engine(f, LevelSchedule::constant(8, 10), ValidityPolicy::kRecord);
  for (const auto& q : grid_points(1, 8))
    for (std::size_t k = 1; k <= 5; ++k) EXPECT_EQ(a->value(k, q), b->value(k, q));
}

// g_1 from scratch: enumerate the lattice, condition on the eps-ball, project with the LP.
TEST(SubdomainEngine, FirstLevelMatchesDirectEnumeration) {
  const AffineCubeDomain segment(2, {{Rational(1), Rational(1)}}, {Rational(1, 2)});
  auto f = builtin_function("ratio", 2);
  const std::uint32_t t = 6;
  const Rational eps(1, 4);
  auto engine = subdomain_engine(f, segment, LevelSchedule::constant(t, 4), eps, ValidityPolicy::kRecord);
  for (const RationalVector& q : {RationalVector{Rational(1, 4), Rational(1, 4)},
                                  RationalVector{Rational(3, 8), Rational(1, 8)},
                                  RationalVector{Rational(1, 2), Rational(0)}}) {
    Rational hit = 0, mass = 0;
    for (std::uint32_t a = 0; a <= t; ++a) {
      for (std::uint32_t b = 0; b <= t; ++b) {
        RationalVector x{Rational(a, t), Rational(b, t)};
        auto proj = linf_project_lp(segment, x);
        if (!(proj.distance < eps)) continue;
        Rational w = test_support::binomial_pmf(t, a, q[0]) * test_support::binomial_pmf(t, b, q[1]);
        mass += w;
        if (f(proj.point) >= Rational(1, 2)) hit += w;
      }
    }
    EXPECT_EQ(engine->g_value(1, q), hit / mass) << to_string(q);
    EXPECT_EQ(engine->value(2, q), (4 * f(q) - hit / mass) / 3);
  }
}

TEST(SubdomainFactory, InteriorFrequencyMatches) {
  const AffineCubeDomain segment(2, {{Rational(1), Rational(1)}}, {Rational(1, 2)});
  auto program = subdomain_factory(builtin_function("ratio", 2), segment, LevelSchedule::constant(32),
                                   Rational(1, 16), ValidityPolicy::kRecord);
  auto report = run_trials("seg", program_sampler(program), {Rational(1, 4), Rational(1, 4)},
                           RunConfig{20000, 3, {}, 1});
  EXPECT_TRUE(within_sigmas(report.count("1"), report.completed(), Rational(1, 2), 4.0));
  EXPECT_THROW(subdomain_factory(builtin_function("ratio", 2), AffineCubeDomain::k_subset(3, 1),
                                 LevelSchedule::constant(8), Rational(1, 8)),
               UsageError);
}
