#include <gtest/gtest.h>

#include "bfactory/combinators.hpp"
#include "bfactory/factory.hpp"
#include "bfactory/harness.hpp"
#include "support.hpp"

using namespace bfactory;

namespace {

// Independent oracle: sum the probabilities of all root-to-1-leaf paths by
// walking the JSON form of the tree.
Rational json_tree_probability(const Json& node, const RationalVector& p) {
  if (node.contains("leaf")) return node.at("leaf").get<int>() == 1 ? Rational(1) : Rational(0);
  const Json& body = node.at("node");
  Rational q = body.contains("coin") ? p.at(body.at("coin").get<std::size_t>() - 1)
                                     : rational_from_json(body.at("bias"));
  return (1 - q) * json_tree_probability(body.at("zero"), p) + q * json_tree_probability(body.at("one"), p);
}

// A random finite tree over n coins with occasional helper flips.
FiniteTree random_tree(std::mt19937_64& rng, std::size_t n, int depth) {
  if (depth == 0 || rng() % 4 == 0) return FiniteTree::leaf(rng() % 2 == 1);
  auto zero = random_tree(rng, n, depth - 1);
  auto one = random_tree(rng, n, depth - 1);
  if (rng() % 5 == 0) return FiniteTree::bias(Rational(1 + static_cast<long>(rng() % 6), 7), zero, one);
  return FiniteTree::coin(rng() % n, zero, one);
}

}  // namespace

TEST(ExactEval, CubicExampleMatchesClosedForm) {
  std::mt19937_64 rng(1);
  auto tree = cubic_example_tree({0, 1, 2});
  for (int i = 0; i < 50; ++i) {
    auto p = test_support::random_unit_vector(rng, 3);
    EXPECT_EQ(exact_eval(tree, p), p[0] * p[1] * (1 - p[2]));
  }
}

TEST(ExactEval, AgreesWithPathSumOracleOnRandomTrees) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    auto tree = random_tree(rng, 3, 6);
    auto p = test_support::random_unit_vector(rng, 3);
    EXPECT_EQ(exact_eval(tree, p), json_tree_probability(tree.to_json(), p));
  }
}

TEST(ExactEval, ComplementAndGraftCompose) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto a = random_tree(rng, 2, 5), b = random_tree(rng, 2, 5);
    auto p = test_support::random_unit_vector(rng, 2);
    EXPECT_EQ(exact_eval(a.complemented(), p), 1 - exact_eval(a, p));
    EXPECT_EQ(exact_eval(a.graft_on_ones(b), p), exact_eval(a, p) * exact_eval(b, p));
  }
}

TEST(FiniteTree, JsonRoundTripAndValidation) {
  auto tree = cubic_example_tree({0, 1, 0});
  auto back = FiniteTree::from_json(tree.to_json());
  EXPECT_EQ(back.to_json(), tree.to_json());
  EXPECT_EQ(tree.arity(), 2u);
  EXPECT_THROW(FiniteTree::from_json(parse_json(R"({"node": {"coin": 0, "zero": {"leaf": 0}, "one": {"leaf": 1}}})")),
               UsageError);
  EXPECT_THROW(FiniteTree::from_json(parse_json(R"({"leaf": 2})")), UsageError);
  EXPECT_THROW(FiniteTree::bias(Rational(1), FiniteTree::leaf(false), FiniteTree::leaf(true)), UsageError);
}

TEST(LeafMonomials, SumToTheExactProbability) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    auto tree = random_tree(rng, 3, 6);
    auto p = test_support::random_unit_vector(rng, 3);
    Rational total = 0;
    for (const auto& m : leaf_monomials(tree, 3)) total += m.evaluate(p);
    EXPECT_EQ(total, exact_eval(tree, p));
  }
}

TEST(FaceCertificate, CubicTreeOnItsFaces) {
  auto tree = cubic_example_tree({0, 0, 0});
  // Open interior: p^2(1-p) >= c (p(1-p))^m with the path's own exponents.
  auto interior = face_certificate(tree, FacePartition({FaceRole::kFree}));
  ASSERT_TRUE(interior);
  EXPECT_EQ(interior->c, 1);
  for (const Rational& p : {Rational(1, 7), Rational(1, 2), Rational(9, 10)})
    EXPECT_GE(p * p * (1 - p), interior->c * pow(face_poly(FacePartition({FaceRole::kFree}), {p}), interior->m));
  // At p = 0 and p = 1 no 1-leaf is reachable.
  EXPECT_FALSE(face_certificate(tree, FacePartition({FaceRole::kZero})));
  EXPECT_FALSE(face_certificate(tree, FacePartition({FaceRole::kOne})));
}

TEST(TruncatedBounds, SandwichTheExactValue) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    auto tree = random_tree(rng, 2, 6);
    auto p = test_support::random_unit_vector(rng, 2);
    Rational exact = exact_eval(tree, p);
    Rational prev_lo = 0, prev_hi = 1;
    for (std::size_t d = 1; d <= 7; ++d) {
      auto b = truncated_bounds(Program::finite(tree), p, d);
      EXPECT_LE(b.lower, exact);
      EXPECT_GE(b.upper, exact);
      EXPECT_GE(b.lower, prev_lo);
      EXPECT_LE(b.upper, prev_hi);
      prev_lo = b.lower;
      prev_hi = b.upper;
    }
    EXPECT_EQ(prev_lo, exact);
    EXPECT_EQ(prev_hi, exact);
  }
  EXPECT_THROW(truncated_bounds(Program::finite(cubic_example_tree({0, 0, 0})), {Rational(1, 2)}, 0), UsageError);
}

TEST(TruncatedBounds, ProceduralRatioConverges) {
  // p_1/(p_1+p_2) at (1/3, 1/6) is 2/3. A round costs two flips and retries with probability 3/4.
  auto b = truncated_bounds(ratio_retry(0, 1), {Rational(1, 3), Rational(1, 6)}, 34,
                            std::uint64_t{1} << 24);
  EXPECT_EQ(b.upper - b.lower, pow(Rational(3, 4), 17));
  EXPECT_LE(b.lower, Rational(2, 3));
  EXPECT_GE(b.upper, Rational(2, 3));
  EXPECT_LT(b.upper - b.lower, Rational(1, 100));
}

TEST(Run, BudgetExhaustionIsReportedNotThrown) {
  // Always retries at p = (0, 0).
  auto program = ratio_retry(0, 1);
  CoinBank bank({Rational(0), Rational(0)}, 1);
  Outcome o = run(program, bank, FlipBudget(100));
  EXPECT_TRUE(o.exhausted());
  EXPECT_EQ(o.flips_used, 100u);
}

TEST(Run, FiniteTreeFlipsAreCounted) {
  auto tree = cubic_example_tree({0, 0, 0});
  CoinBank bank({Rational(1)}, 1);
  Outcome o = run(Program::finite(tree), bank, FlipBudget::unbounded());
  EXPECT_FALSE(o.one());
  EXPECT_EQ(o.flips_used, 3u);
}
