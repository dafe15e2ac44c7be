#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bfactory/combinators.hpp"
#include "bfactory/subdomain.hpp"

namespace bfactory {

inline constexpr std::size_t kDefaultVertexCap = 12;

/// Extreme points of [0,1]^n ∩ {Mx = b}, sorted lexicographically.
/// Throws ResourceError when n exceeds `max_n`.
std::vector<RationalVector> enum_vertices(const AffineCubeDomain& domain, std::size_t max_n = kDefaultVertexCap);

/// Dimension of the affine hull of a non-empty point set.
std::size_t affine_dimension(const std::vector<RationalVector>& points);

struct CubeConstraint {
  std::size_t coordinate;
  unsigned value;  // 0 or 1
};

struct Facet {
  std::vector<std::size_t> vertices;  // indices into the polytope's vertex list, ascending
  std::optional<CubeConstraint> constraint;  // a cube facet cutting it out, when one exists
};

class Polytope {
 public:
  /// [0,1]^n ∩ {Mx = b}.
  static Polytope from_domain(const AffineCubeDomain& domain, std::size_t max_n = kDefaultVertexCap);
  /// conv(vertices); every point must be extreme. Used for shapes outside the cube-slice family.
  static Polytope from_vertices(std::vector<RationalVector> vertices);

  std::size_t n() const { return vertices_.front().size(); }
  std::size_t dimension() const { return dimension_; }
  const std::vector<RationalVector>& vertices() const { return vertices_; }
  const std::optional<AffineCubeDomain>& domain() const { return domain_; }
  const std::vector<Facet>& facets() const { return facets_; }

  bool contains(const RationalVector& p) const;

 private:
  Polytope() = default;
  void finish();

  std::vector<RationalVector> vertices_;
  std::optional<AffineCubeDomain> domain_;
  std::size_t dimension_ = 0;
  std::vector<Facet> facets_;
};

/// Facets of conv of the selected vertices (within their own affine hull), as vertex-index sets.
std::vector<std::vector<std::size_t>> hull_facets(const std::vector<RationalVector>& points,
                                                  const std::vector<std::size_t>& subset);

struct FanTriangulation {
  std::size_t apex = 0;
  std::vector<std::vector<std::size_t>> simplices;  // ascending vertex indices, sorted
};

/// Joins the apex to a recursive fan triangulation of every facet not containing it;
/// each facet uses its lexicographically smallest vertex as sub-apex.
FanTriangulation fan_triangulation(const Polytope& polytope, std::size_t apex);

/// Barycentric coordinates of p in the first simplex (in stored order) that contains it,
/// one entry per polytope vertex.
std::vector<Rational> locate_and_decompose(const Polytope& polytope, const FanTriangulation& fan,
                                           const RationalVector& p);

/// The average of the fan decompositions over every apex, with memoized evaluation.
class VertexDecomposition {
 public:
  explicit VertexDecomposition(Polytope polytope);

  const Polytope& polytope() const { return polytope_; }
  const std::vector<FanTriangulation>& fans() const { return fans_; }

  /// f_v(p) for every vertex v.
  std::vector<Rational> at(const RationalVector& p) const;

  /// f_v as a target function for vertex index v.
  TargetFunction function(std::size_t v) const;

 private:
  Polytope polytope_;
  std::vector<FanTriangulation> fans_;
  struct Memo {
    std::mutex mutex;
    std::map<RationalVector, std::vector<Rational>, RationalVectorLess> values;
  };
  std::shared_ptr<Memo> memo_ = std::make_shared<Memo>();
};

/// f_v(p) for every vertex, without memoization.
std::vector<Rational> f_v(const Polytope& polytope, const RationalVector& p);

struct Lemma71Pair {
  std::size_t vertex;
  std::size_t facet;
  std::optional<std::size_t> witness;  // coordinate i with v_i > 0 = x_i on F, or v_i < 1 = x_i on F
};

struct Lemma71Report {
  bool holds = true;
  std::vector<Lemma71Pair> pairs;
  std::optional<Lemma71Pair> counterexample;
};

/// For every vertex v and facet F not containing v, looks for a separating coordinate.
Lemma71Report lemma71_check(const Polytope& polytope);

/// Returns vertex v with probability f_v(p) by racing one subdomain factory per vertex.
class CombinatorialFactory {
 public:
  CombinatorialFactory(std::shared_ptr<const VertexDecomposition> decomposition, std::vector<Program> factories,
                       std::vector<std::shared_ptr<LevelEngine>> engines);

  const Polytope& polytope() const { return decomposition_->polytope(); }
  const VertexDecomposition& decomposition() const { return *decomposition_; }
  const std::vector<std::shared_ptr<LevelEngine>>& engines() const { return engines_; }

  /// Index of the sampled vertex.
  std::size_t sample(CoinSource& source) const;
  RaceOutcome run(CoinSource& source, const FlipBudget& budget) const;

 private:
  std::shared_ptr<const VertexDecomposition> decomposition_;
  std::optional<BernoulliRace> race_;  // empty for a single-vertex polytope
  std::vector<std::shared_ptr<LevelEngine>> engines_;
};

/// One subdomain factory per f_v on the polytope's domain, sharing the projected lattices.
CombinatorialFactory combinatorial_factory(const Polytope& polytope, const LevelSchedule& schedule,
                                           const Rational& eps, ValidityPolicy policy = ValidityPolicy::kStrict,
                                           std::uint64_t work_limit = kDefaultLatticeWorkLimit);

}  // namespace bfactory
