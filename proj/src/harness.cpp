#include "bfactory/harness.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <thread>

namespace bfactory {

TrialSampler program_sampler(Program program) {
  return [program = std::move(program)](CoinSource& source, const FlipBudget& budget) {
    Outcome o = run(program, source, budget);
    TrialOutcome out;
    out.flips = o.flips_used;
    if (!o.exhausted()) out.label = o.one() ? "1" : "0";
    return out;
  };
}

ChiSquareResult chi_square(const std::vector<std::uint64_t>& counts, const std::vector<Rational>& probs,
                           double alpha) {
  if (counts.size() != probs.size()) throw UsageError("chi_square: counts and probabilities differ in length");
  Rational total_p = 0;
  for (const auto& p : probs) {
    if (p < 0) throw UsageError("chi_square: negative probability");
    total_p += p;
  }
  if (total_p != 1) throw UsageError("chi_square: oracle probabilities sum to " + to_string(total_p));
  std::uint64_t n = 0;
  for (auto c : counts) n += c;

  ChiSquareResult result;
  struct Cell {
    double expected;
    double observed;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] == 0) {
      if (counts[i] > 0) {
        result.pass = false;
        result.p_value = 0;
        result.statistic = std::numeric_limits<double>::infinity();
        result.diagnostic = "cell " + std::to_string(i) + " has probability 0 but " + std::to_string(counts[i]) +
                            " observations";
        return result;
      }
      continue;
    }
    cells.push_back(Cell{to_double(probs[i]) * static_cast<double>(n), static_cast<double>(counts[i])});
  }
  if (n == 0) {
    result.diagnostic = "no observations";
    return result;
  }
  // Pool small cells, smallest first, until every cell expects at least 5.
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.expected < b.expected; });
  while (cells.size() > 1 && cells.front().expected < 5) {
    cells[1].expected += cells[0].expected;
    cells[1].observed += cells[0].observed;
    cells.erase(cells.begin());
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.expected < b.expected; });
  }
  if (cells.size() < 2) {
    result.diagnostic = "a single cell remains after pooling";
    return result;
  }
  for (const auto& c : cells) result.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected;
  result.dof = cells.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(result.dof));
  result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  result.pass = result.p_value >= alpha;
  return result;
}

double z_score(std::uint64_t count, std::uint64_t trials, const Rational& p) {
  double mean = to_double(p) * static_cast<double>(trials);
  double diff = static_cast<double>(count) - mean;
  if (p == 0 || p == 1) {
    if (count == (p == 0 ? 0 : trials)) return 0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(mean * (1 - to_double(p)));
}

bool within_sigmas(std::uint64_t count, std::uint64_t trials, const Rational& p, double sigmas) {
  return std::abs(z_score(count, trials, p)) <= sigmas;
}

std::uint64_t TrialReport::count(const std::string& label) const {
  for (const auto& row : rows)
    if (row.label == label) return row.count;
  return 0;
}

namespace {

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string TrialReport::to_csv() const {
  std::string out = "outcome,count,oracle_num,oracle_den,z,flips_p50,flips_p99\n";
  const std::string p50 = std::to_string(flips.p50), p99 = std::to_string(flips.p99);
  for (const auto& row : rows) {
    out += csv_field(row.label) + "," + std::to_string(row.count) + ",";
    if (row.oracle) out += numerator(*row.oracle).str() + "," + denominator(*row.oracle).str() + ",";
    else out += ",,";
    out += (row.z ? format_double(*row.z) : "") + "," + p50 + "," + p99 + "\n";
  }
  out += "<exhausted>," + std::to_string(exhausted) + ",,,," + p50 + "," + p99 + "\n";
  return out;
}

Json TrialReport::to_json() const {
  Json rows_json = Json::array();
  for (const auto& row : rows) {
    Json r{{"outcome", row.label}, {"count", row.count}};
    r["oracle"] = row.oracle ? bfactory::to_json(*row.oracle) : Json(nullptr);
    r["z"] = row.z && std::isfinite(*row.z) ? Json(*row.z) : row.z ? Json(format_double(*row.z)) : Json(nullptr);
    rows_json.push_back(std::move(r));
  }
  Json out{{"sampler", sampler},
           {"trials", trials},
           {"seed", seed},
           {"exhausted", exhausted},
           {"outcomes", rows_json},
           {"flips", {{"p50", flips.p50}, {"p90", flips.p90}, {"p99", flips.p99}, {"max", flips.max}}}};
  if (chi) {
    out["chi_square"] = {{"statistic", std::isfinite(chi->statistic) ? Json(chi->statistic) : Json("inf")},
                         {"dof", chi->dof},
                         {"p_value", chi->p_value},
                         {"pass", chi->pass},
                         {"diagnostic", chi->diagnostic}};
  }
  return out;
}

TrialReport run_trials(const std::string& sampler_id, const TrialSampler& sampler, const RationalVector& biases,
                       const RunConfig& config) {
  if (config.trials == 0) throw UsageError("run_trials needs at least one trial");
  unsigned threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, config.trials));

  struct Partial {
    std::map<std::string, std::uint64_t> counts;
    std::vector<std::uint64_t> flips;
    std::uint64_t exhausted = 0;
    std::exception_ptr error;
  };
  std::vector<Partial> partials(threads);
  auto work = [&](unsigned w) {
    Partial& part = partials[w];
    std::uint64_t begin = config.trials * w / threads, end = config.trials * (w + 1) / threads;
    try {
      for (std::uint64_t i = begin; i < end; ++i) {
        CoinBank bank = CoinBank::for_trial(biases, config.seed, i);
        TrialOutcome o = sampler(bank, config.budget);
        if (o.label) {
          ++part.counts[*o.label];
          part.flips.push_back(o.flips);
        } else {
          ++part.exhausted;
        }
      }
    } catch (...) {
      part.error = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  TrialReport report;
  report.sampler = sampler_id;
  report.trials = config.trials;
  report.seed = config.seed;
  std::map<std::string, std::uint64_t> counts;
  std::vector<std::uint64_t> flips;
  for (auto& part : partials) {
    if (part.error) std::rethrow_exception(part.error);
    for (const auto& [label, c] : part.counts) counts[label] += c;
    flips.insert(flips.end(), part.flips.begin(), part.flips.end());
    report.exhausted += part.exhausted;
  }
  for (const auto& [label, c] : counts) report.rows.push_back(OutcomeRow{label, c, std::nullopt, std::nullopt});
  if (!flips.empty()) {
    std::sort(flips.begin(), flips.end());
    auto q = [&](double f) { return flips[static_cast<std::size_t>(f * static_cast<double>(flips.size() - 1))]; };
    report.flips = FlipQuantiles{q(0.5), q(0.9), q(0.99), flips.back()};
  }
  return report;
}

void attach_oracle(TrialReport& report, const std::vector<std::pair<std::string, Rational>>& oracle, double alpha) {
  for (const auto& [label, p] : oracle) {
    auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const OutcomeRow& r) { return r.label == label; });
    if (it == report.rows.end()) {
      report.rows.push_back(OutcomeRow{label, 0, std::nullopt, std::nullopt});
      it = std::prev(report.rows.end());
    }
    it->oracle = p;
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const OutcomeRow& a, const OutcomeRow& b) { return a.label < b.label; });
  std::vector<std::uint64_t> counts;
  std::vector<Rational> probs;
  const std::uint64_t n = report.completed();
  for (auto& row : report.rows) {
    Rational p = row.oracle.value_or(Rational(0));
    if (row.oracle) row.z = z_score(row.count, n, p);
    counts.push_back(row.count);
    probs.push_back(p);
  }
  report.chi = chi_square(counts, probs, alpha);
}

}  // namespace bfactory
