#include "bfactory/polytope.hpp"

#include <algorithm>
#include <set>

#include "bfactory/lp.hpp"

namespace bfactory {

namespace {

// Calls visit(subset) for every k-subset of [0, n), in lexicographic order.
template <typename Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    visit(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Rational dot(const RationalVector& a, const RationalVector& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
  return s;
}

RationalVector minus(const RationalVector& a, const RationalVector& b) {
  RationalVector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

// Is p a convex combination of `points`?
bool in_convex_hull(const std::vector<RationalVector>& points, const RationalVector& p) {
  if (points.empty()) return false;
  LinearProgram lp;
  const std::size_t m = points.size();
  lp.c.assign(m, Rational(0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    RationalVector row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = points[j][i];
    lp.A.push_back(std::move(row));
    lp.b.push_back(p[i]);
  }
  lp.A.emplace_back(m, Rational(1));
  lp.b.push_back(1);
  return solve_lp(lp).optimal();
}

// Barycentric coordinates of p with respect to affinely independent points, if p is in their affine hull.
std::optional<RationalVector> barycentric(const std::vector<RationalVector>& vertices,
                                          const std::vector<std::size_t>& simplex, const RationalVector& p) {
  const std::size_t k = simplex.size();
  std::vector<RationalVector> rows;
  for (std::size_t i = 0; i < p.size(); ++i) {
    RationalVector row(k + 1);
    for (std::size_t j = 0; j < k; ++j) row[j] = vertices[simplex[j]][i];
    row[k] = p[i];
    rows.push_back(std::move(row));
  }
  rows.emplace_back(k + 1, Rational(1));
  auto pivots = row_reduce(rows);
  if (pivots.size() != k || pivots.back() >= k) return std::nullopt;
  RationalVector lambda(k);
  for (std::size_t j = 0; j < k; ++j) lambda[j] = rows[j][k];
  return lambda;
}

}  // namespace

std::vector<RationalVector> enum_vertices(const AffineCubeDomain& domain, std::size_t max_n) {
  const std::size_t n = domain.n();
  if (n > max_n)
    throw ResourceError("vertex enumeration is capped at n = " + std::to_string(max_n) + ", got n = " +
                        std::to_string(n));
  const auto& M = domain.M();
  const auto& b = domain.b();
  const std::size_t r = domain.rank();
  std::set<RationalVector, RationalVectorLess> found;

  // A vertex fixes every coordinate outside a set F of at most rank(M) coordinates whose columns
  // are independent; the equations then determine x_F.
  for (std::size_t j = 0; j <= r; ++j) {
    for_each_subset(n, j, [&](const std::vector<std::size_t>& free) {
      std::vector<RationalVector> columns;
      for (const auto& row : M) {
        RationalVector c(j);
        for (std::size_t q = 0; q < j; ++q) c[q] = row[free[q]];
        columns.push_back(std::move(c));
      }
      if (j > 0 && rank(columns) != j) return;
      std::vector<bool> is_free(n, false);
      for (auto i : free) is_free[i] = true;
      std::vector<std::size_t> fixed;
      for (std::size_t i = 0; i < n; ++i)
        if (!is_free[i]) fixed.push_back(i);
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << fixed.size()); ++bits) {
        RationalVector x(n, Rational(0));
        for (std::size_t q = 0; q < fixed.size(); ++q) x[fixed[q]] = (bits >> (fixed.size() - 1 - q)) & 1U;
        std::vector<RationalVector> system;
        for (std::size_t row = 0; row < M.size(); ++row) {
          RationalVector eq = columns[row];
          Rational rhs = b[row];
          for (auto i : fixed) rhs -= M[row][i] * x[i];
          eq.push_back(rhs);
          system.push_back(std::move(eq));
        }
        auto pivots = row_reduce(system);
        if (!pivots.empty() && pivots.back() == j) continue;  // inconsistent
        bool inside = true;
        for (std::size_t q = 0; q < j; ++q) {
          x[free[q]] = system[q][j];
          inside = inside && x[free[q]] >= 0 && x[free[q]] <= 1;
        }
        if (inside) found.insert(std::move(x));
      }
    });
  }
  return {found.begin(), found.end()};
}

std::size_t affine_dimension(const std::vector<RationalVector>& points) {
  if (points.empty()) throw UsageError("affine dimension of an empty set");
  std::vector<RationalVector> diffs;
  for (std::size_t i = 1; i < points.size(); ++i) diffs.push_back(minus(points[i], points.front()));
  return rank(std::move(diffs));
}

std::vector<std::vector<std::size_t>> hull_facets(const std::vector<RationalVector>& points,
                                                  const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw UsageError("hull_facets needs at least one point");
  std::vector<RationalVector> selected;
  for (auto i : subset) selected.push_back(points.at(i));
  const std::size_t d = affine_dimension(selected);
  if (d == 0) return {};
  std::vector<RationalVector> directions;
  for (std::size_t i = 1; i < selected.size(); ++i) directions.push_back(minus(selected[i], selected.front()));
  row_reduce(directions);

  std::set<std::vector<std::size_t>> facets;
  for_each_subset(subset.size(), d, [&](const std::vector<std::size_t>& pick) {
    const RationalVector& s0 = selected[pick[0]];
    // Normal a = sum_k lambda_k D_k, orthogonal to s_j - s_0 inside the affine hull.
    std::vector<RationalVector> system;
    for (std::size_t j = 1; j < d; ++j) {
      RationalVector diff = minus(selected[pick[j]], s0);
      RationalVector row(d);
      for (std::size_t k = 0; k < d; ++k) row[k] = dot(directions[k], diff);
      system.push_back(std::move(row));
    }
    auto kernel = null_space(system, d);
    if (kernel.size() != 1) return;
    RationalVector normal(s0.size(), Rational(0));
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < normal.size(); ++i) normal[i] += kernel[0][k] * directions[k][i];
    bool above = false, below = false;
    std::vector<std::size_t> on;
    for (std::size_t q = 0; q < selected.size(); ++q) {
      Rational v = dot(normal, minus(selected[q], s0));
      if (v > 0) above = true;
      if (v < 0) below = true;
      if (v == 0) on.push_back(subset[q]);
    }
    if (above && below) return;
    std::sort(on.begin(), on.end());
    facets.insert(std::move(on));
  });
  return {facets.begin(), facets.end()};
}

// ---------------------------------------------------------------------------

Polytope Polytope::from_domain(const AffineCubeDomain& domain, std::size_t max_n) {
  Polytope p;
  p.vertices_ = enum_vertices(domain, max_n);
  p.domain_ = domain;
  p.finish();
  return p;
}

Polytope Polytope::from_vertices(std::vector<RationalVector> vertices) {
  if (vertices.empty()) throw UsageError("a polytope needs at least one vertex");
  for (const auto& v : vertices)
    if (v.size() != vertices.front().size()) throw UsageError("vertices have different dimensions");
  std::sort(vertices.begin(), vertices.end(), RationalVectorLess{});
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    std::vector<RationalVector> others;
    for (std::size_t j = 0; j < vertices.size(); ++j)
      if (j != i) others.push_back(vertices[j]);
    if (in_convex_hull(others, vertices[i])) throw UsageError(to_string(vertices[i]) + " is not an extreme point");
  }
  Polytope p;
  p.vertices_ = std::move(vertices);
  p.finish();
  return p;
}

void Polytope::finish() {
  dimension_ = affine_dimension(vertices_);
  std::vector<std::size_t> all(vertices_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (auto& members : hull_facets(vertices_, all)) {
    Facet facet{std::move(members), std::nullopt};
    for (std::size_t i = 0; i < n() && !facet.constraint; ++i)
      for (unsigned value : {0U, 1U}) {
        auto on = [&](std::size_t v) { return vertices_[v][i] == value; };
        if (std::all_of(facet.vertices.begin(), facet.vertices.end(), on) && !std::all_of(all.begin(), all.end(), on)) {
          facet.constraint = CubeConstraint{i, value};
          break;
        }
      }
    facets_.push_back(std::move(facet));
  }
}

bool Polytope::contains(const RationalVector& p) const {
  if (p.size() != n()) return false;
  if (domain_) return domain_->contains(p);
  return in_convex_hull(vertices_, p);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::size_t>> fan(const std::vector<RationalVector>& vertices,
                                          const std::vector<std::size_t>& subset, std::size_t apex) {
  if (subset.size() == 1) return {{apex}};
  std::vector<std::vector<std::size_t>> out;
  for (const auto& facet : hull_facets(vertices, subset)) {
    if (std::binary_search(facet.begin(), facet.end(), apex)) continue;
    for (auto simplex : fan(vertices, facet, facet.front())) {
      simplex.insert(std::lower_bound(simplex.begin(), simplex.end(), apex), apex);
      out.push_back(std::move(simplex));
    }
  }
  return out;
}

}  // namespace

FanTriangulation fan_triangulation(const Polytope& polytope, std::size_t apex) {
  if (apex >= polytope.vertices().size()) throw UsageError("apex is not a vertex index");
  std::vector<std::size_t> all(polytope.vertices().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FanTriangulation t{apex, fan(polytope.vertices(), all, apex)};
  std::sort(t.simplices.begin(), t.simplices.end());
  return t;
}

std::vector<Rational> locate_and_decompose(const Polytope& polytope, const FanTriangulation& fan,
                                           const RationalVector& p) {
  if (!polytope.contains(p)) throw UsageError(to_string(p) + " is not in the polytope");
  for (const auto& simplex : fan.simplices) {
    auto lambda = barycentric(polytope.vertices(), simplex, p);
    if (!lambda) continue;
    if (std::any_of(lambda->begin(), lambda->end(), [](const Rational& x) { return x < 0; })) continue;
    std::vector<Rational> out(polytope.vertices().size(), Rational(0));
    for (std::size_t j = 0; j < simplex.size(); ++j) out[simplex[j]] = (*lambda)[j];
    return out;
  }
  throw CertificateViolation("no simplex of the fan contains " + to_string(p));
}

VertexDecomposition::VertexDecomposition(Polytope polytope) : polytope_(std::move(polytope)) {
  for (std::size_t w = 0; w < polytope_.vertices().size(); ++w) fans_.push_back(fan_triangulation(polytope_, w));
}

std::vector<Rational> VertexDecomposition::at(const RationalVector& p) const {
  {
    std::lock_guard lock(memo_->mutex);
    auto it = memo_->values.find(p);
    if (it != memo_->values.end()) return it->second;
  }
  const std::size_t count = polytope_.vertices().size();
  std::vector<Rational> sum(count, Rational(0));
  for (const auto& fan : fans_) {
    auto g = locate_and_decompose(polytope_, fan, p);
    for (std::size_t v = 0; v < count; ++v) sum[v] += g[v];
  }
  for (auto& s : sum) s /= static_cast<long>(count);
  std::lock_guard lock(memo_->mutex);
  memo_->values.emplace(p, sum);
  return sum;
}

TargetFunction VertexDecomposition::function(std::size_t v) const {
  if (v >= polytope_.vertices().size()) throw UsageError("vertex index out of range");
  // Copies share the memo.
  auto self = std::make_shared<const VertexDecomposition>(*this);
  return TargetFunction{polytope_.n(), [self, v](const RationalVector& p) { return self->at(p)[v]; },
                        "f_v[" + to_string(polytope_.vertices()[v]) + "]"};
}

std::vector<Rational> f_v(const Polytope& polytope, const RationalVector& p) {
  return VertexDecomposition(polytope).at(p);
}

Lemma71Report lemma71_check(const Polytope& polytope) {
  Lemma71Report report;
  const auto& V = polytope.vertices();
  const auto& facets = polytope.facets();
  for (std::size_t f = 0; f < facets.size(); ++f) {
    const auto& members = facets[f].vertices;
    for (std::size_t v = 0; v < V.size(); ++v) {
      if (std::binary_search(members.begin(), members.end(), v)) continue;
      Lemma71Pair pair{v, f, std::nullopt};
      for (std::size_t i = 0; i < polytope.n() && !pair.witness; ++i) {
        auto all_equal = [&](unsigned value) {
          return std::all_of(members.begin(), members.end(), [&](std::size_t u) { return V[u][i] == value; });
        };
        if ((V[v][i] > 0 && all_equal(0)) || (V[v][i] < 1 && all_equal(1))) pair.witness = i;
      }
      if (!pair.witness && report.holds) {
        report.holds = false;
        report.counterexample = pair;
      }
      report.pairs.push_back(pair);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

CombinatorialFactory::CombinatorialFactory(std::shared_ptr<const VertexDecomposition> decomposition,
                                           std::vector<Program> factories,
                                           std::vector<std::shared_ptr<LevelEngine>> engines)
    : decomposition_(std::move(decomposition)), engines_(std::move(engines)) {
  if (!factories.empty()) race_.emplace(std::move(factories));
}

std::size_t CombinatorialFactory::sample(CoinSource& source) const {
  if (!race_) return 0;
  return race_->sample(source).index;
}

RaceOutcome CombinatorialFactory::run(CoinSource& source, const FlipBudget& budget) const {
  if (!race_) return RaceOutcome{0, 0, 0};
  return run_race(*race_, source, budget);
}

CombinatorialFactory combinatorial_factory(const Polytope& polytope, const LevelSchedule& schedule,
                                           const Rational& eps, ValidityPolicy policy, std::uint64_t work_limit) {
  if (!polytope.domain()) throw UsageError("combinatorial factories need a polytope given by a domain");
  auto decomposition = std::make_shared<const VertexDecomposition>(polytope);
  if (polytope.dimension() == 0) return CombinatorialFactory(decomposition, {}, {});
  std::vector<Program> programs;
  std::vector<std::shared_ptr<LevelEngine>> engines;
  for (std::size_t v = 0; v < polytope.vertices().size(); ++v) {
    auto engine = subdomain_engine(decomposition->function(v), *polytope.domain(), schedule, eps, policy, work_limit);
    programs.push_back(engine_program(engine, "vertex " + std::to_string(v)));
    engines.push_back(std::move(engine));
  }
  return CombinatorialFactory(decomposition, std::move(programs), std::move(engines));
}

}  // namespace bfactory
