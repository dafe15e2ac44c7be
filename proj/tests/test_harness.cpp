#include <gtest/gtest.h>

#include <cmath>

#include "bfactory/combinators.hpp"
#include "bfactory/harness.hpp"

using namespace bfactory;

TEST(ChiSquare, HandComputedStatistic) {
  auto r = chi_square({10, 30}, {Rational(1, 2), Rational(1, 2)});
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.dof, 1u);
  // Upper tail of chi-square(1) at 10 is erfc(sqrt(5)).
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(5.0)), 1e-12);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(chi_square({10, 30}, {Rational(1, 2), Rational(1, 2)}, 0.01).pass);
}

TEST(ChiSquare, PoolsSmallCells) {
  // Expected counts 1, 1, 98: the two small cells pool into one of 2, then into the large one.
  auto r = chi_square({1, 1, 98}, {Rational(1, 100), Rational(1, 100), Rational(98, 100)});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.dof, 0u);
  // Expected 2, 2, 46, 50: the pooled pair (4) is still small and absorbs the next cell.
  auto s = chi_square({3, 2, 45, 50}, {Rational(1, 50), Rational(1, 50), Rational(46, 100), Rational(1, 2)});
  EXPECT_EQ(s.dof, 1u);
}

TEST(ChiSquare, ZeroProbabilityCellAndValidation) {
  auto r = chi_square({5, 1}, {Rational(1), Rational(0)});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.diagnostic.empty());
  auto point_mass = chi_square({100, 0}, {Rational(1), Rational(0)});
  EXPECT_TRUE(point_mass.pass);
  EXPECT_EQ(point_mass.statistic, 0);
  EXPECT_THROW(chi_square({1, 1}, {Rational(1, 2), Rational(1, 3)}), UsageError);
  EXPECT_THROW(chi_square({1}, {Rational(1, 2), Rational(1, 2)}), UsageError);
}

// Calibration: counts drawn from the oracle itself pass at alpha = 0.001 in at least 99 of 100 runs.
TEST(ChiSquare, CalibrationMetaTrial) {
  auto program = convex_mix(WeightedMixture::finite({Rational(1, 3)}, {const_program(Rational(1))}));
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto report = run_trials("third", program_sampler(program), {}, RunConfig{2000, seed, {}, 1});
    attach_oracle(report, {{"0", Rational(2, 3)}, {"1", Rational(1, 3)}});
    passes += report.chi->pass;
  }
  EXPECT_GE(passes, 99);
}

TEST(ZScore, ValuesAndDegenerateCases) {
  EXPECT_DOUBLE_EQ(z_score(60, 100, Rational(1, 2)), 2.0);
  EXPECT_EQ(z_score(0, 100, Rational(0)), 0);
  EXPECT_TRUE(std::isinf(z_score(1, 100, Rational(0))));
  EXPECT_TRUE(within_sigmas(52, 100, Rational(1, 2)));
  EXPECT_FALSE(within_sigmas(70, 100, Rational(1, 2)));
}

TEST(RunTrials, ConstHalfWithinBinomialBand) {
  auto report = run_trials("half", program_sampler(const_program(Rational(1, 2))), {}, RunConfig{100000, 1, {}, 0});
  double freq = static_cast<double>(report.count("1")) / 100000.0;
  EXPECT_LT(std::abs(freq - 0.5), 3 * 0.5 / std::sqrt(100000.0));
}

TEST(RunTrials, DeterministicSamplerHasOneOutcome) {
  auto report = run_trials("one", program_sampler(const_program(Rational(1))), {}, RunConfig{500, 1, {}, 0});
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.count("1"), 500u);
  attach_oracle(report, {{"0", Rational(0)}, {"1", Rational(1)}});
  EXPECT_TRUE(report.chi->pass);
  EXPECT_EQ(report.chi->statistic, 0);
}

TEST(RunTrials, ExhaustedTrialsAreSeparate) {
  auto report = run_trials("stuck", program_sampler(ratio_retry(0, 1)), {Rational(0), Rational(0)},
                           RunConfig{50, 1, FlipBudget(40), 1});
  EXPECT_EQ(report.exhausted, 50u);
  EXPECT_EQ(report.completed(), 0u);
  EXPECT_TRUE(report.rows.empty());
  EXPECT_NE(report.to_csv().find("<exhausted>,50"), std::string::npos);
  EXPECT_THROW(run_trials("x", program_sampler(coin_program(0)), {Rational(1, 2)}, RunConfig{0, 1, {}, 1}),
               UsageError);
}

TEST(RunTrials, ByteIdenticalAcrossThreadCounts) {
  auto sampler = program_sampler(ratio_retry(0, 1));
  const RationalVector p{Rational(1, 3), Rational(1, 5)};
  auto a = run_trials("r", sampler, p, RunConfig{5000, 9, {}, 1});
  auto b = run_trials("r", sampler, p, RunConfig{5000, 9, {}, 4});
  attach_oracle(a, {{"0", Rational(3, 8)}, {"1", Rational(5, 8)}});
  attach_oracle(b, {{"0", Rational(3, 8)}, {"1", Rational(5, 8)}});
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  auto c = run_trials("r", sampler, p, RunConfig{5000, 10, {}, 1});
  attach_oracle(c, {{"0", Rational(3, 8)}, {"1", Rational(5, 8)}});
  EXPECT_NE(a.to_csv(), c.to_csv());
}

TEST(Report, CsvColumnsAndJsonFields) {
  auto report = run_trials("c", program_sampler(coin_program(0)), {Rational(1, 4)}, RunConfig{1000, 2, {}, 1});
  attach_oracle(report, {{"0", Rational(3, 4)}, {"1", Rational(1, 4)}});
  auto csv = report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "outcome,count,oracle_num,oracle_den,z,flips_p50,flips_p99");
  EXPECT_NE(csv.find("\n1,"), std::string::npos);
  EXPECT_NE(csv.find(",1,4,"), std::string::npos);
  auto j = report.to_json();
  EXPECT_EQ(j.at("trials").get<std::uint64_t>(), 1000u);
  EXPECT_EQ(j.at("outcomes").size(), 2u);
  EXPECT_TRUE(j.contains("chi_square"));
  EXPECT_EQ(j.at("flips").at("max").get<std::uint64_t>(), 1u);
}
