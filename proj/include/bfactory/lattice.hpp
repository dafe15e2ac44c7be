#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "bfactory/factory.hpp"
#include "bfactory/rational.hpp"

namespace bfactory {

/// A realization of the empirical mean vector after t flips per coin: value_i = counts_i / t.
struct LatticePoint {
  std::uint32_t t = 1;
  std::vector<std::uint32_t> counts;

  RationalVector values() const;
};

/// Flips per coin used at each recursion level: an explicit prefix, then a constant.
class LevelSchedule {
 public:
  static constexpr std::size_t kDefaultMaxLevel = 200;

  static LevelSchedule constant(std::uint32_t t, std::size_t max_level = kDefaultMaxLevel);
  LevelSchedule(std::vector<std::uint32_t> prefix, std::uint32_t tail, std::size_t max_level = kDefaultMaxLevel);

  /// t_k for level k >= 1.
  std::uint32_t t(std::size_t level) const;
  std::size_t max_level() const { return max_level_; }
  /// Every t the schedule uses, ascending.
  std::vector<std::uint32_t> distinct() const;

 private:
  std::vector<std::uint32_t> prefix_;
  std::uint32_t tail_ = 1;
  std::size_t max_level_ = kDefaultMaxLevel;
};

/// An exact function from rational points to [0,1]. Continuity and polynomial
/// boundedness are the caller's claim; faces-verifier can spot-check them.
struct TargetFunction {
  std::size_t arity = 0;
  std::function<Rational(const RationalVector&)> eval;
  std::string name;

  Rational operator()(const RationalVector& x) const;
};

/// 1 - f.
TargetFunction complement(const TargetFunction& f);
TargetFunction constant_function(std::size_t arity, const Rational& c);

/// sum_j coeff_j prod_i p_i^{e_ji}, read from
/// `{"terms": [{"coeff": "1/4", "exponents": [0]}, {"coeff": "1/2", "exponents": [1]}]}`.
TargetFunction polynomial_from_json(const Json& json);

/// Named functions for the CLI: "affine-quarter" (1+2p)/4, "identity", "square",
/// "cubic" p^2 - p^3, "ratio" p1/(p1+p2), "const:<c>".
TargetFunction builtin_function(const std::string& name, std::size_t arity = 1);

inline constexpr std::uint64_t kDefaultLatticeWorkLimit = std::uint64_t{1} << 24;

/// Number of lattice points (t+1)^n, or throws ResourceError above `limit`.
std::uint64_t lattice_size(std::size_t n, std::uint32_t t, std::uint64_t limit = kDefaultLatticeWorkLimit);

/// g(q) = P_q[f(mean of t flips) >= 1/2], by exact enumeration of all (t+1)^n lattice points.
Rational gk_eval(const std::function<Rational(const LatticePoint&)>& level, const RationalVector& q,
                 std::uint32_t t, std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// Exact f_k by direct rational recursion, memoized on (level, point).
///
/// f_1 = f and f_{k+1}(q) = (4/3)(f_k(q) - g_k(q)/4) with g_k(q) = P_q[f_k(mean) >= 1/2]
/// over the lattice of t_k flips per coin. A value outside [0,1] raises CertificateViolation.
class LevelOracle {
 public:
  LevelOracle(TargetFunction f, LevelSchedule schedule,
              std::uint64_t work_limit = kDefaultLatticeWorkLimit);

  Rational fk(std::size_t level, const RationalVector& q);
  Rational gk(std::size_t level, const RationalVector& q);

  /// sum_{s<=k} (1/4)(3/4)^(s-1) g_s(q).
  Rational partial_sum(std::size_t k, const RationalVector& q);

  const TargetFunction& target() const { return f_; }
  const LevelSchedule& schedule() const { return schedule_; }
  std::size_t memo_size() const;

 private:
  using Key = std::pair<std::size_t, RationalVector>;
  struct KeyLess {
    bool operator()(const Key& a, const Key& b) const;
  };

  Rational compute_fk(std::size_t level, const RationalVector& q);

  TargetFunction f_;
  LevelSchedule schedule_;
  std::uint64_t work_limit_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Rational, KeyLess> memo_;
};

/// Convenience: one-off f_k with a cold cache.
Rational fk_eval(std::size_t level, const RationalVector& q, const LevelSchedule& schedule,
                 const TargetFunction& f);

struct CertificateReport {
  bool holds = true;
  RationalVector worst_point;
  Rational worst_margin;
  bool worst_is_complement = false;  // the 1-f inequality produced the worst margin
  std::size_t points_checked = 0;
};

/// Checks f(p) - P_p[f(mean) >= 1/2]/4 >= f(p)/8 and the same for 1-f (where
/// P[1 - f(mean) >= 1/2] = P[f(mean) <= 1/2]) on the grid of mesh 1/mesh_denominator.
/// Desk-scale evidence only: the inequality is claimed for every p.
CertificateReport certificate_check(const TargetFunction& f, std::uint32_t t, std::uint32_t mesh_denominator,
                                    std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// All points of the grid {0, 1/d, ..., 1}^n in lexicographic order.
std::vector<RationalVector> grid_points(std::size_t n, std::uint32_t d);

}  // namespace bfactory
