#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bfactory/coin.hpp"
#include "bfactory/factory.hpp"
#include "bfactory/lattice.hpp"

namespace bfactory {

/// Binomial weights of a rational point q scaled to integers:
/// table[i][c] = C(t,c) a_i^c (d_i - a_i)^(t-c) for q_i = a_i/d_i in lowest terms.
/// The true weight of counts c is prod_i table[i][c_i] / scale, scale = prod_i d_i^t.
struct PointWeights {
  std::uint32_t t = 0;
  std::vector<std::vector<Integer>> table;
  Integer scale;
};

PointWeights point_weights(const RationalVector& q, std::uint32_t t);

/// The lattice of t flips per coin, restricted to accepted realizations, each
/// mapped to the point where the level functions are evaluated.
///
/// For the cube every realization is accepted and maps to itself. A subdomain
/// accepts realizations near K and maps them to their projection.
struct ProjectedLattice {
  std::size_t n = 0;
  std::uint32_t t = 1;
  /// Accepted count vectors, flattened and in lexicographic order.
  std::vector<std::uint32_t> counts;
  /// Accepted entry -> index into `points`.
  std::vector<std::uint32_t> point_of;
  /// Grid index (mixed radix t+1, first coin most significant) -> accepted entry, or -1.
  std::vector<std::int32_t> slot_of_grid;
  /// Distinct evaluation points.
  std::vector<RationalVector> points;

  std::size_t accepted() const { return point_of.size(); }
  std::span<const std::uint32_t> entry(std::size_t a) const { return {counts.data() + a * n, n}; }
  std::size_t grid_index(std::span<const std::uint32_t> c) const;

  /// sum over accepted entries a with mask[a] == want (or all entries when mask is empty)
  /// of prod_i w.table[i][c_i].
  Integer weighted_sum(const PointWeights& w, std::span<const std::uint8_t> mask = {}, bool want = true) const;
  /// prod_i w.table[i][c_i] for one entry.
  Integer weight(const PointWeights& w, std::size_t a) const;
};

using CountFilter = std::function<bool(const std::vector<std::uint32_t>& counts)>;

/// Builds a lattice from an acceptance test and a projection, deduplicating projected points.
/// `prefilter`, when set, rejects realizations cheaply before the exact test runs.
ProjectedLattice build_lattice(std::size_t n, std::uint32_t t,
                               const std::function<std::optional<RationalVector>(const RationalVector&)>& project,
                               std::uint64_t work_limit = kDefaultLatticeWorkLimit, const CountFilter& prefilter = {});

/// Every realization accepted, evaluated where it lies.
ProjectedLattice cube_lattice(std::size_t n, std::uint32_t t, std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// What happens when a level function leaves [0,1] at a tracked point.
/// kStrict throws CertificateViolation; kRecord keeps building and counts the points.
enum class ValidityPolicy : std::uint8_t { kStrict, kRecord };

/// The recursion f_{k+1} = (4 f_k - g_k)/3 evaluated on every point a sampler can reach,
/// with integer-scaled weights, plus the sampler itself.
///
/// g_k(q) is the conditional probability that the level-k function is >= 1/2 at the
/// projected realization, given acceptance. Levels are built lazily and shared between threads.
class LevelEngine {
 public:
  using LatticeProvider = std::function<ProjectedLattice(std::uint32_t t)>;

  LevelEngine(TargetFunction f, LevelSchedule schedule, const LatticeProvider& provider,
              ValidityPolicy policy = ValidityPolicy::kStrict);

  /// One draw: K geometric, then [f_K(projected mean of t_K flips) >= 1/2].
  bool sample(CoinSource& source) const;

  /// f_k(q) and g_k(q) at an arbitrary point q of the domain.
  Rational value(std::size_t level, const RationalVector& q) const;
  Rational g_value(std::size_t level, const RationalVector& q) const;

  /// Builds levels 1..k now. Throws CertificateViolation when some f_j leaves [0,1].
  void ensure_level(std::size_t k) const;
  std::size_t levels_built() const { return built_.load(std::memory_order_acquire); }

  /// Level-k decisions, indexed by accepted entry of lattice(t_k).
  std::span<const std::uint8_t> hits(std::size_t level) const;

  const ProjectedLattice& lattice(std::uint32_t t) const;
  const TargetFunction& target() const { return f_; }
  const LevelSchedule& schedule() const { return schedule_; }
  std::size_t arity() const { return f_.arity; }
  std::size_t tracked_points() const { return tracked_.size(); }

  /// Under kRecord: the first k whose f_k left [0,1] somewhere (0 if none so far), and
  /// the number of offending tracked points per built level (entry k-1 counts f_{k+1}).
  std::size_t first_invalid_level() const;
  std::vector<std::size_t> invalid_counts() const;

 private:
  struct LatticeData {
    ProjectedLattice lattice;
    std::vector<std::uint32_t> tracked_of_point;
  };
  struct Tracked {
    RationalVector point;
    std::map<std::uint32_t, PointWeights> weights;
    std::map<std::uint32_t, Integer> norm;  // weighted_sum over all accepted entries
  };

  const LatticeData& data(std::uint32_t t) const;
  void build_next_level() const;  // mutex held

  TargetFunction f_;
  LevelSchedule schedule_;
  std::map<std::uint32_t, LatticeData> lattices_;
  std::vector<Tracked> tracked_;

  mutable std::mutex mutex_;
  mutable std::atomic<std::size_t> built_{0};
  mutable std::vector<std::unique_ptr<const std::vector<std::uint8_t>>> hit_storage_;
  mutable std::unique_ptr<std::atomic<const std::vector<std::uint8_t>*>[]> hits_;
  // State of the newest level: f values per tracked point, and the previous level's sums for reuse.
  mutable std::vector<Rational> f_current_;
  mutable std::vector<Integer> last_sum_;
  mutable std::uint32_t last_t_ = 0;
  ValidityPolicy policy_;
  mutable std::vector<std::size_t> invalid_counts_;
};

/// A program that draws from `engine` on each run.
Program engine_program(std::shared_ptr<const LevelEngine> engine, std::string name);

std::shared_ptr<LevelEngine> cube_engine(const TargetFunction& f, const LevelSchedule& schedule,
                                         ValidityPolicy policy = ValidityPolicy::kStrict,
                                         std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// Mixture over levels k of the [f_k(mean of t_k flips) >= 1/2] factories; its output
/// probability is f(p) whenever every level stays in [0,1].
Program general_factory(const TargetFunction& f, const LevelSchedule& schedule,
                        std::uint64_t work_limit = kDefaultLatticeWorkLimit);

}  // namespace bfactory
