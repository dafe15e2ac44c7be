#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bfactory/coin.hpp"
#include "bfactory/engine.hpp"
#include "bfactory/json_io.hpp"
#include "bfactory/lattice.hpp"

namespace bfactory {

/// K = {x in [0,1]^n : M x = b}, checked non-empty on construction.
struct Projection;

class AffineCubeDomain {
 public:
  AffineCubeDomain(std::size_t n, std::vector<RationalVector> M, RationalVector b);

  /// The whole cube (no equations).
  static AffineCubeDomain cube(std::size_t n);
  /// {x : sum x_i = k}.
  static AffineCubeDomain k_subset(std::size_t n, std::size_t k);
  /// m x m doubly stochastic matrices, row-major.
  static AffineCubeDomain birkhoff(std::size_t m);

  /// `{"n": 3, "M": [["1","1","1"]], "b": ["2"]}`.
  static AffineCubeDomain from_json(const Json& json);
  Json to_json() const;

  std::size_t n() const { return n_; }
  const std::vector<RationalVector>& M() const { return M_; }
  const RationalVector& b() const { return b_; }
  /// Rank of M.
  std::size_t rank() const { return reduced_.size(); }

  bool contains(const RationalVector& x) const;
  /// Largest |m.x - beta| / ||m||_1 over the reduced equations: a lower bound on the distance to K.
  Rational residual_bound(const RationalVector& x) const;

  /// Shared cache of projected lattices, keyed by (t, eps).
  std::shared_ptr<const ProjectedLattice> lattice(std::uint32_t t, const Rational& eps,
                                                  std::uint64_t work_limit = kDefaultLatticeWorkLimit) const;

 private:
  friend struct Projector;
  friend ProjectedLattice subdomain_lattice(const AffineCubeDomain&, std::uint32_t, const Rational&, std::uint64_t);
  friend Projection linf_project(const AffineCubeDomain&, const RationalVector&);
  enum class Shape : std::uint8_t { kCube, kPoint, kHyperplane, kLine, kGeneral };

  std::size_t n_;
  std::vector<RationalVector> M_;
  RationalVector b_;
  std::vector<RationalVector> reduced_;  // echelon rows of [M | b]
  Shape shape_ = Shape::kGeneral;
  RationalVector base_;       // kPoint, kLine: a point of the affine hull
  RationalVector direction_;  // kLine
  Rational s_lo_, s_hi_;      // kLine: K = base + s * direction, s in [s_lo, s_hi]

  struct Cache {
    std::mutex mutex;
    std::map<std::pair<std::uint32_t, Rational>, std::shared_ptr<const ProjectedLattice>> lattices;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct Projection {
  RationalVector point;
  Rational distance;
};

/// A point of K nearest to x in the l-infinity norm; the lexicographically smallest among ties.
Projection linf_project(const AffineCubeDomain& domain, const RationalVector& x);

/// The same projection through the general exact LP (used as a reference for the closed forms).
Projection linf_project_lp(const AffineCubeDomain& domain, const RationalVector& x);

/// Whether the l-infinity distance from x to K is strictly below eps.
bool within_ball(const AffineCubeDomain& domain, const RationalVector& x, const Rational& eps);

struct ZSample {
  std::optional<RationalVector> point;  // empty when the budget ran out
  std::uint64_t flips_used = 0;
  std::uint64_t attempts = 0;
};

/// Redraws the mean of t flips per coin until it lies within eps of K, then projects it.
ZSample sample_Z(CoinSource& source, const AffineCubeDomain& domain, std::uint32_t t, const Rational& eps,
                 const FlipBudget& budget = FlipBudget::unbounded());

struct Lemma52Report {
  Rational conditioned;    // P[Y in A]
  Rational unconditioned;  // P[mean in A]
  Rational acceptance;     // P[mean within eps of K]
  bool precondition = false;  // t >= log(8n) / (2 eps^2), decided with a certified log enclosure
  bool holds = false;         // conditioned <= 2 * unconditioned
};

/// Exact check of P[Y in A] <= 2 P[mean in A] by enumerating the (t+1)^n lattice.
Lemma52Report lemma52_check(const AffineCubeDomain& domain, const RationalVector& p, std::uint32_t t,
                            const Rational& eps, const std::function<bool(const LatticePoint&)>& event,
                            std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// Realizations within eps of K, each mapped to its projection.
ProjectedLattice subdomain_lattice(const AffineCubeDomain& domain, std::uint32_t t, const Rational& eps,
                                   std::uint64_t work_limit = kDefaultLatticeWorkLimit);

inline constexpr std::uint32_t kDefaultSubdomainT = 32;
inline const Rational kDefaultSubdomainEps{1, 16};

std::shared_ptr<LevelEngine> subdomain_engine(const TargetFunction& f, const AffineCubeDomain& domain,
                                              const LevelSchedule& schedule, const Rational& eps,
                                              ValidityPolicy policy = ValidityPolicy::kStrict,
                                              std::uint64_t work_limit = kDefaultLatticeWorkLimit);

/// The level mixture with g_k(p) = P_p[f_k(Z) >= 1/2], Z the projected conditioned mean.
Program subdomain_factory(const TargetFunction& f, const AffineCubeDomain& domain, const LevelSchedule& schedule,
                          const Rational& eps, ValidityPolicy policy = ValidityPolicy::kStrict,
                          std::uint64_t work_limit = kDefaultLatticeWorkLimit);

}  // namespace bfactory
