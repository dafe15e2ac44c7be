#include "bfactory/lattice.hpp"

#include <algorithm>
#include <set>

#include "bfactory/combinators.hpp"
#include "bfactory/engine.hpp"
#include "bfactory/json_io.hpp"

namespace bfactory {

RationalVector LatticePoint::values() const {
  RationalVector v;
  v.reserve(counts.size());
  for (auto c : counts) v.emplace_back(Integer(c), Integer(t));
  return v;
}

LevelSchedule LevelSchedule::constant(std::uint32_t t, std::size_t max_level) { return LevelSchedule({}, t, max_level); }

LevelSchedule::LevelSchedule(std::vector<std::uint32_t> prefix, std::uint32_t tail, std::size_t max_level)
    : prefix_(std::move(prefix)), tail_(tail), max_level_(max_level) {
  if (tail_ == 0 || std::find(prefix_.begin(), prefix_.end(), 0u) != prefix_.end())
    throw UsageError("level schedule needs t_k >= 1");
  if (max_level_ == 0) throw UsageError("level schedule needs max_level >= 1");
}

std::uint32_t LevelSchedule::t(std::size_t level) const {
  if (level == 0) throw UsageError("levels start at 1");
  return level <= prefix_.size() ? prefix_[level - 1] : tail_;
}

std::vector<std::uint32_t> LevelSchedule::distinct() const {
  std::set<std::uint32_t> values(prefix_.begin(), prefix_.end());
  values.insert(tail_);
  return {values.begin(), values.end()};
}

Rational TargetFunction::operator()(const RationalVector& x) const {
  if (x.size() != arity) throw UsageError(name + " expects " + std::to_string(arity) + " coordinates");
  return eval(x);
}

TargetFunction complement(const TargetFunction& f) {
  return TargetFunction{f.arity, [f](const RationalVector& x) { return Rational(1) - f(x); }, "1-" + f.name};
}

TargetFunction constant_function(std::size_t arity, const Rational& c) {
  if (!in_unit_interval(c)) throw UsageError("constant " + to_string(c) + " outside [0,1]");
  return TargetFunction{arity, [c](const RationalVector&) { return c; }, "const:" + to_string(c)};
}

TargetFunction polynomial_from_json(const Json& json) {
  if (!json.is_object() || !json.contains("terms") || !json["terms"].is_array())
    throw UsageError("polynomial needs a \"terms\" array");
  struct Term {
    Rational coeff;
    std::vector<unsigned> exponents;
  };
  std::vector<Term> terms;
  std::size_t arity = json.value("arity", std::size_t{0});
  for (const auto& item : json["terms"]) {
    Term term{rational_from_json(item.at("coeff")), {}};
    for (const auto& e : item.at("exponents")) {
      if (!e.is_number_unsigned()) throw UsageError("exponents must be non-negative integers");
      term.exponents.push_back(e.get<unsigned>());
    }
    arity = std::max(arity, term.exponents.size());
    terms.push_back(std::move(term));
  }
  if (arity == 0) throw UsageError("polynomial has no coordinates");
  return TargetFunction{arity,
                        [terms](const RationalVector& x) {
                          Rational total = 0;
                          for (const auto& term : terms) {
                            Rational value = term.coeff;
                            for (std::size_t i = 0; i < term.exponents.size(); ++i)
                              value *= pow(x[i], term.exponents[i]);
                            total += value;
                          }
                          return total;
                        },
                        "polynomial"};
}

TargetFunction builtin_function(const std::string& name, std::size_t arity) {
  if (name.rfind("const:", 0) == 0) return constant_function(arity, parse_rational(name.substr(6)));
  if (name == "affine-quarter")
    return TargetFunction{1, [](const RationalVector& x) { return (1 + 2 * x[0]) / 4; }, name};
  if (name == "identity") return TargetFunction{1, [](const RationalVector& x) { return x[0]; }, name};
  if (name == "square") return TargetFunction{1, [](const RationalVector& x) { return x[0] * x[0]; }, name};
  if (name == "cubic")
    return TargetFunction{1, [](const RationalVector& x) { return x[0] * x[0] - x[0] * x[0] * x[0]; }, name};
  if (name == "ratio")
    return TargetFunction{2,
                          [](const RationalVector& x) {
                            if (x[0] + x[1] == 0) throw DomainError("p1/(p1+p2) is undefined at (0,0)");
                            return Rational(x[0] / (x[0] + x[1]));
                          },
                          name};
  throw UsageError("unknown function '" + name + "'");
}

std::uint64_t lattice_size(std::size_t n, std::uint32_t t, std::uint64_t limit) {
  std::uint64_t size = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (size > limit / (std::uint64_t{t} + 1))
      throw ResourceError("lattice (" + std::to_string(t) + "+1)^" + std::to_string(n) + " exceeds the work limit of " +
                          std::to_string(limit) + " points");
    size *= std::uint64_t{t} + 1;
  }
  return size;
}

namespace {

// Advances counts in lexicographic order; false after the last point.
bool next_counts(std::vector<std::uint32_t>& c, std::uint32_t t) {
  for (std::size_t i = c.size(); i-- > 0;) {
    if (c[i] < t) {
      ++c[i];
      return true;
    }
    c[i] = 0;
  }
  return false;
}

// powers[i][c] = C(t,c) q_i^c (1-q_i)^(t-c) as exact rationals.
std::vector<std::vector<Rational>> rational_weights(const RationalVector& q, std::uint32_t t) {
  std::vector<std::vector<Rational>> w(q.size(), std::vector<Rational>(t + 1));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<Rational> up(t + 1, Rational(1)), down(t + 1, Rational(1));
    for (std::uint32_t c = 1; c <= t; ++c) {
      up[c] = up[c - 1] * q[i];
      down[c] = down[c - 1] * (1 - q[i]);
    }
    for (std::uint32_t c = 0; c <= t; ++c) w[i][c] = Rational(binomial(t, c)) * up[c] * down[t - c];
  }
  return w;
}

void check_point(const RationalVector& q) {
  if (!in_unit_cube(q)) throw UsageError("point " + to_string(q) + " is outside [0,1]^n");
}

}  // namespace

Rational gk_eval(const std::function<Rational(const LatticePoint&)>& level, const RationalVector& q, std::uint32_t t,
                 std::uint64_t work_limit) {
  check_point(q);
  if (t == 0) throw UsageError("t must be positive");
  lattice_size(q.size(), t, work_limit);
  auto w = rational_weights(q, t);
  LatticePoint x{t, std::vector<std::uint32_t>(q.size(), 0)};
  Rational total = 0;
  do {
    Rational weight = 1;
    for (std::size_t i = 0; i < q.size() && weight != 0; ++i) weight *= w[i][x.counts[i]];
    if (weight != 0 && level(x) >= Rational(1, 2)) total += weight;
  } while (next_counts(x.counts, t));
  return total;
}

// ---------------------------------------------------------------------------

LevelOracle::LevelOracle(TargetFunction f, LevelSchedule schedule, std::uint64_t work_limit)
    : f_(std::move(f)), schedule_(std::move(schedule)), work_limit_(work_limit) {}

bool LevelOracle::KeyLess::operator()(const Key& a, const Key& b) const {
  if (a.first != b.first) return a.first < b.first;
  return RationalVectorLess{}(a.second, b.second);
}

std::size_t LevelOracle::memo_size() const {
  std::shared_lock lock(mutex_);
  return memo_.size();
}

Rational LevelOracle::fk(std::size_t level, const RationalVector& q) {
  if (level == 0) throw UsageError("levels start at 1");
  if (level > schedule_.max_level())
    throw ResourceError("level " + std::to_string(level) + " exceeds the schedule cap " +
                        std::to_string(schedule_.max_level()));
  check_point(q);
  Key key{level, q};
  {
    std::shared_lock lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  Rational value = compute_fk(level, q);
  std::unique_lock lock(mutex_);
  memo_.emplace(std::move(key), value);
  return value;
}

Rational LevelOracle::compute_fk(std::size_t level, const RationalVector& q) {
  Rational value;
  if (level == 1) {
    value = f_(q);
  } else {
    value = Rational(4, 3) * (fk(level - 1, q) - gk(level - 1, q) / 4);
  }
  if (!in_unit_interval(value))
    throw CertificateViolation("f_" + std::to_string(level) + to_string(q) + " = " + to_string(value) +
                               " leaves [0,1]; t = " + std::to_string(schedule_.t(level > 1 ? level - 1 : 1)) +
                               " is too small");
  return value;
}

Rational LevelOracle::gk(std::size_t level, const RationalVector& q) {
  return gk_eval([&](const LatticePoint& x) { return fk(level, x.values()); }, q, schedule_.t(level), work_limit_);
}

Rational LevelOracle::partial_sum(std::size_t k, const RationalVector& q) {
  Rational total = 0;
  for (std::size_t s = 1; s <= k; ++s) total += WeightedMixture::geometric_weight(s) * gk(s, q);
  return total;
}

Rational fk_eval(std::size_t level, const RationalVector& q, const LevelSchedule& schedule, const TargetFunction& f) {
  LevelOracle oracle(f, schedule);
  return oracle.fk(level, q);
}

// ---------------------------------------------------------------------------

std::vector<RationalVector> grid_points(std::size_t n, std::uint32_t d) {
  if (d == 0) throw UsageError("grid needs a positive denominator");
  std::uint64_t size = lattice_size(n, d, kDefaultLatticeWorkLimit);
  std::vector<RationalVector> points;
  points.reserve(size);
  LatticePoint x{d, std::vector<std::uint32_t>(n, 0)};
  do points.push_back(x.values());
  while (next_counts(x.counts, d));
  return points;
}

CertificateReport certificate_check(const TargetFunction& f, std::uint32_t t, std::uint32_t mesh_denominator,
                                    std::uint64_t work_limit) {
  if (mesh_denominator < 2) throw UsageError("grid mesh must be 1/d with d >= 2");
  const std::size_t n = f.arity;
  ProjectedLattice lattice = cube_lattice(n, t, work_limit);
  std::vector<std::uint8_t> at_least(lattice.accepted()), at_most(lattice.accepted());
  for (std::size_t a = 0; a < lattice.accepted(); ++a) {
    Rational v = f(lattice.points[lattice.point_of[a]]);
    at_least[a] = v >= Rational(1, 2);
    at_most[a] = v <= Rational(1, 2);
  }
  CertificateReport report;
  bool first = true;
  for (const auto& p : grid_points(n, mesh_denominator)) {
    PointWeights w = point_weights(p, t);
    Rational up(lattice.weighted_sum(w, at_least), w.scale);
    Rational down(lattice.weighted_sum(w, at_most), w.scale);
    Rational fp = f(p);
    Rational margin = fp - up / 4 - fp / 8;
    Rational margin_c = (1 - fp) - down / 4 - (1 - fp) / 8;
    bool complement_worse = margin_c < margin;
    const Rational& worst = complement_worse ? margin_c : margin;
    if (first || worst < report.worst_margin) {
      report.worst_margin = worst;
      report.worst_point = p;
      report.worst_is_complement = complement_worse;
      first = false;
    }
    ++report.points_checked;
  }
  report.holds = report.worst_margin >= 0;
  return report;
}

}  // namespace bfactory
