#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bfactory/coin.hpp"
#include "bfactory/factory.hpp"
#include "bfactory/json_io.hpp"

namespace bfactory {

/// One trial's result: an outcome label, or none when the budget ran out.
struct TrialOutcome {
  std::optional<std::string> label;
  std::uint64_t flips = 0;
};

/// Must be safe to call concurrently on different sources.
using TrialSampler = std::function<TrialOutcome(CoinSource& source, const FlipBudget& budget)>;

/// Runs a program; labels are "0" and "1".
TrialSampler program_sampler(Program program);

struct RunConfig {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  FlipBudget budget = FlipBudget::unbounded();
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ChiSquareResult {
  double statistic = 0;
  std::size_t dof = 0;
  double p_value = 1;
  bool pass = true;
  std::string diagnostic;
};

inline constexpr double kDefaultAlpha = 0.001;

/// Pearson's test of counts against exact cell probabilities. Cells expected to
/// hold fewer than 5 observations are pooled; a count in a zero-probability
/// cell fails outright.
ChiSquareResult chi_square(const std::vector<std::uint64_t>& counts, const std::vector<Rational>& probs,
                           double alpha = kDefaultAlpha);

/// (count - N p) / sqrt(N p (1-p)); 0 or +-infinity when p is 0 or 1.
double z_score(std::uint64_t count, std::uint64_t trials, const Rational& p);

/// |count - N p| <= sigmas * sqrt(N p (1-p)).
bool within_sigmas(std::uint64_t count, std::uint64_t trials, const Rational& p, double sigmas = 3.0);

struct OutcomeRow {
  std::string label;
  std::uint64_t count = 0;
  std::optional<Rational> oracle;
  std::optional<double> z;
};

struct FlipQuantiles {
  std::uint64_t p50 = 0, p90 = 0, p99 = 0, max = 0;
};

struct TrialReport {
  std::string sampler;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t exhausted = 0;
  std::vector<OutcomeRow> rows;  // sorted by label
  FlipQuantiles flips;           // over terminated trials
  std::optional<ChiSquareResult> chi;

  std::uint64_t completed() const { return trials - exhausted; }
  std::uint64_t count(const std::string& label) const;

  /// outcome,count,oracle_num,oracle_den,z,flips_p50,flips_p99
  std::string to_csv() const;
  Json to_json() const;
};

/// N independent trials, trial i on CoinBank::for_trial(biases, seed, i). The
/// report does not depend on the thread count.
TrialReport run_trials(const std::string& sampler_id, const TrialSampler& sampler, const RationalVector& biases,
                       const RunConfig& config);

/// Adds oracle rows (creating zero-count rows as needed), z-scores and the chi-square test.
/// Oracle probabilities must sum to 1.
void attach_oracle(TrialReport& report, const std::vector<std::pair<std::string, Rational>>& oracle,
                   double alpha = kDefaultAlpha);

}  // namespace bfactory
