#include "bfactory/engine.hpp"

#include <algorithm>

#include "bfactory/combinators.hpp"

namespace bfactory {

PointWeights point_weights(const RationalVector& q, std::uint32_t t) {
  PointWeights w;
  w.t = t;
  w.scale = 1;
  w.table.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    Integer a = numerator(q[i]);
    Integer d = denominator(q[i]);
    Integer b = d - a;
    auto& row = w.table[i];
    row.assign(t + 1, Integer(0));
    if (a == 0) {
      row[0] = 1;
    } else if (b == 0) {
      row[t] = 1;
    } else {
      std::vector<Integer> up(t + 1, Integer(1)), down(t + 1, Integer(1));
      for (std::uint32_t c = 1; c <= t; ++c) {
        up[c] = up[c - 1] * a;
        down[c] = down[c - 1] * b;
      }
      for (std::uint32_t c = 0; c <= t; ++c) row[c] = binomial(t, c) * up[c] * down[t - c];
    }
    // Zero and one coordinates are deterministic, so their scale is 1.
    if (a != 0 && b != 0) w.scale *= boost::multiprecision::pow(d, t);
  }
  return w;
}

std::size_t ProjectedLattice::grid_index(std::span<const std::uint32_t> c) const {
  std::size_t index = 0;
  for (auto v : c) index = index * (t + 1) + v;
  return index;
}

Integer ProjectedLattice::weight(const PointWeights& w, std::size_t a) const {
  Integer value = 1;
  for (std::size_t i = 0; i < n && value != 0; ++i) value *= w.table[i][counts[a * n + i]];
  return value;
}

namespace {

// Nested sum over the sorted entries [lo, hi) that share their first `depth` counts.
struct NestedSum {
  const ProjectedLattice& lattice;
  const PointWeights& w;
  std::span<const std::uint8_t> mask;
  bool want;

  bool included(std::size_t a) const { return mask.empty() || (mask[a] != 0) == want; }

  Integer operator()(std::size_t lo, std::size_t hi, std::size_t depth) const {
    const std::size_t n = lattice.n;
    const auto& row = w.table[depth];
    Integer total = 0;
    if (depth + 1 == n) {
      for (std::size_t a = lo; a < hi; ++a)
        if (included(a)) {
          const Integer& b = row[lattice.counts[a * n + depth]];
          if (b != 0) total += b;
        }
      return total;
    }
    std::size_t i = lo;
    while (i < hi) {
      std::uint32_t v = lattice.counts[i * n + depth];
      std::size_t j = i + 1;
      while (j < hi && lattice.counts[j * n + depth] == v) ++j;
      if (row[v] != 0) {
        Integer inner = (*this)(i, j, depth + 1);
        if (inner != 0) total += row[v] * inner;
      }
      i = j;
    }
    return total;
  }
};

}  // namespace

Integer ProjectedLattice::weighted_sum(const PointWeights& w, std::span<const std::uint8_t> mask, bool want) const {
  if (n == 0 || accepted() == 0) return 0;
  return NestedSum{*this, w, mask, want}(0, accepted(), 0);
}

ProjectedLattice build_lattice(std::size_t n, std::uint32_t t,
                               const std::function<std::optional<RationalVector>(const RationalVector&)>& project,
                               std::uint64_t work_limit, const CountFilter& prefilter) {
  if (t == 0) throw UsageError("t must be positive");
  std::uint64_t size = lattice_size(n, t, work_limit);
  ProjectedLattice lattice;
  lattice.n = n;
  lattice.t = t;
  lattice.slot_of_grid.assign(size, -1);
  std::map<RationalVector, std::uint32_t, RationalVectorLess> index_of;
  LatticePoint x{t, std::vector<std::uint32_t>(n, 0)};
  for (std::uint64_t g = 0; g < size; ++g) {
    // Mixed radix decode keeps the entries in lexicographic order.
    std::uint64_t rest = g;
    for (std::size_t i = n; i-- > 0;) {
      x.counts[i] = static_cast<std::uint32_t>(rest % (t + 1));
      rest /= t + 1;
    }
    if (prefilter && !prefilter(x.counts)) continue;
    std::optional<RationalVector> image = project(x.values());
    if (!image) continue;
    auto [it, inserted] = index_of.emplace(*image, static_cast<std::uint32_t>(lattice.points.size()));
    if (inserted) lattice.points.push_back(std::move(*image));
    lattice.slot_of_grid[g] = static_cast<std::int32_t>(lattice.point_of.size());
    lattice.point_of.push_back(it->second);
    lattice.counts.insert(lattice.counts.end(), x.counts.begin(), x.counts.end());
  }
  return lattice;
}

ProjectedLattice cube_lattice(std::size_t n, std::uint32_t t, std::uint64_t work_limit) {
  return build_lattice(
      n, t, [](const RationalVector& x) { return std::optional<RationalVector>(x); }, work_limit);
}

// ---------------------------------------------------------------------------

LevelEngine::LevelEngine(TargetFunction f, LevelSchedule schedule, const LatticeProvider& provider,
                         ValidityPolicy policy)
    : f_(std::move(f)), schedule_(std::move(schedule)), policy_(policy) {
  if (f_.arity == 0) throw UsageError("target function needs at least one coordinate");
  std::map<RationalVector, std::uint32_t, RationalVectorLess> tracked_index;
  for (std::uint32_t t : schedule_.distinct()) {
    LatticeData data{provider(t), {}};
    if (data.lattice.n != f_.arity || data.lattice.t != t) throw UsageError("lattice does not match the schedule");
    if (data.lattice.accepted() == 0) throw UsageError("lattice accepts no realization");
    for (const auto& point : data.lattice.points) {
      auto [it, inserted] = tracked_index.emplace(point, static_cast<std::uint32_t>(tracked_.size()));
      if (inserted) tracked_.push_back(Tracked{point, {}, {}});
      data.tracked_of_point.push_back(it->second);
    }
    lattices_.emplace(t, std::move(data));
  }
  for (auto& tracked : tracked_) {
    for (const auto& [t, data] : lattices_) {
      PointWeights w = point_weights(tracked.point, t);
      Integer norm = data.lattice.weighted_sum(w);
      if (norm == 0) throw UsageError("point " + to_string(tracked.point) + " cannot reach an accepted realization");
      tracked.norm.emplace(t, std::move(norm));
      tracked.weights.emplace(t, std::move(w));
    }
  }
  f_current_.reserve(tracked_.size());
  for (const auto& tracked : tracked_) {
    Rational v = f_(tracked.point);
    if (!in_unit_interval(v))
      throw UsageError(f_.name + to_string(tracked.point) + " = " + to_string(v) + " is outside [0,1]");
    f_current_.push_back(std::move(v));
  }
  hit_storage_.reserve(schedule_.max_level() + 1);
  hits_ = std::make_unique<std::atomic<const std::vector<std::uint8_t>*>[]>(schedule_.max_level() + 1);
  for (std::size_t k = 0; k <= schedule_.max_level(); ++k) hits_[k].store(nullptr, std::memory_order_relaxed);
}

const LevelEngine::LatticeData& LevelEngine::data(std::uint32_t t) const {
  auto it = lattices_.find(t);
  if (it == lattices_.end()) throw UsageError("t = " + std::to_string(t) + " is not in the schedule");
  return it->second;
}

const ProjectedLattice& LevelEngine::lattice(std::uint32_t t) const { return data(t).lattice; }

void LevelEngine::ensure_level(std::size_t k) const {
  if (k == 0) throw UsageError("levels start at 1");
  if (k > schedule_.max_level())
    throw ResourceError("level " + std::to_string(k) + " exceeds the level cap " +
                        std::to_string(schedule_.max_level()));
  if (levels_built() >= k) return;
  std::lock_guard lock(mutex_);
  while (built_.load(std::memory_order_relaxed) < k) build_next_level();
}

// Builds the decisions of level k = built_ + 1 from f_current_ (which holds f_k), then
// advances f_current_ to f_{k+1} so the next call is ready.
void LevelEngine::build_next_level() const {
  const std::size_t k = built_.load(std::memory_order_relaxed) + 1;
  const std::uint32_t t = schedule_.t(k);
  const LatticeData& d = data(t);
  const ProjectedLattice& lat = d.lattice;
  const Rational half(1, 2);

  auto hits = std::make_unique<std::vector<std::uint8_t>>(lat.accepted());
  for (std::size_t a = 0; a < lat.accepted(); ++a)
    (*hits)[a] = f_current_[d.tracked_of_point[lat.point_of[a]]] >= half;

  // Entries that changed since the previous level, when it used the same lattice.
  const std::vector<std::uint8_t>* previous = k > 1 ? hits_[k - 1].load(std::memory_order_relaxed) : nullptr;
  std::vector<std::size_t> changed;
  bool use_delta = false;
  std::size_t ones = static_cast<std::size_t>(std::count(hits->begin(), hits->end(), 1));
  if (previous && last_t_ == t) {
    for (std::size_t a = 0; a < lat.accepted(); ++a)
      if ((*previous)[a] != (*hits)[a]) changed.push_back(a);
    use_delta = changed.size() * lat.n * 4 < std::min(ones, lat.accepted() - ones);
  }
  const bool use_complement = 2 * ones > lat.accepted();

  std::vector<Integer> sums(tracked_.size());
  std::vector<Rational> next_f(tracked_.size());
  std::size_t invalid = 0;
  for (std::size_t j = 0; j < tracked_.size(); ++j) {
    const Tracked& point = tracked_[j];
    const PointWeights& w = point.weights.at(t);
    const Integer& norm = point.norm.at(t);
    Integer sum;
    if (use_delta) {
      sum = last_sum_[j];
      for (std::size_t a : changed) {
        Integer wa = lat.weight(w, a);
        if ((*hits)[a]) sum += wa;
        else sum -= wa;
      }
    } else if (use_complement) {
      sum = norm - lat.weighted_sum(w, *hits, false);
    } else {
      sum = lat.weighted_sum(w, *hits, true);
    }
    Rational g(sum, norm);
    Rational next = (4 * f_current_[j] - g) / 3;
    if (!in_unit_interval(next) && ++invalid && policy_ == ValidityPolicy::kStrict)
      throw CertificateViolation("f_" + std::to_string(k + 1) + to_string(point.point) + " = " + to_string(next) +
                                 " leaves [0,1]; t = " + std::to_string(t) + " is too small for " + f_.name);
    sums[j] = std::move(sum);
    next_f[j] = std::move(next);
  }
  // Reaching here means f_{k+1} is valid everywhere it can be queried.
  invalid_counts_.push_back(invalid);
  f_current_ = std::move(next_f);
  last_sum_ = std::move(sums);
  last_t_ = t;
  hit_storage_.push_back(std::move(hits));
  hits_[k].store(hit_storage_.back().get(), std::memory_order_release);
  built_.store(k, std::memory_order_release);
}

std::size_t LevelEngine::first_invalid_level() const {
  std::lock_guard lock(mutex_);
  for (std::size_t k = 0; k < invalid_counts_.size(); ++k)
    if (invalid_counts_[k] > 0) return k + 2;
  return 0;
}

std::vector<std::size_t> LevelEngine::invalid_counts() const {
  std::lock_guard lock(mutex_);
  return invalid_counts_;
}

std::span<const std::uint8_t> LevelEngine::hits(std::size_t level) const {
  ensure_level(level);
  return *hits_[level].load(std::memory_order_acquire);
}

bool LevelEngine::sample(CoinSource& source) const {
  const std::size_t k = sample_geometric_level(source);
  ensure_level(k);
  const std::vector<std::uint8_t>& decisions = *hits_[k].load(std::memory_order_acquire);
  const ProjectedLattice& lat = data(schedule_.t(k)).lattice;
  std::vector<std::uint32_t> counts(lat.n);
  for (;;) {
    for (std::size_t i = 0; i < lat.n; ++i) {
      std::uint32_t c = 0;
      for (std::uint32_t j = 0; j < lat.t; ++j) c += source.flip(i);
      counts[i] = c;
    }
    std::int32_t slot = lat.slot_of_grid[lat.grid_index(counts)];
    if (slot >= 0) return decisions[static_cast<std::size_t>(slot)] != 0;
  }
}

Rational LevelEngine::g_value(std::size_t level, const RationalVector& q) const {
  const std::uint32_t t = schedule_.t(level);
  auto decisions = hits(level);
  const ProjectedLattice& lat = lattice(t);
  PointWeights w = point_weights(q, t);
  Integer norm = lat.weighted_sum(w);
  if (norm == 0) throw DomainError("no accepted realization is reachable from " + to_string(q));
  return Rational(lat.weighted_sum(w, decisions, true), norm);
}

Rational LevelEngine::value(std::size_t level, const RationalVector& q) const {
  if (level == 0) throw UsageError("levels start at 1");
  if (!in_unit_cube(q) || q.size() != f_.arity) throw UsageError("point " + to_string(q) + " is not in [0,1]^n");
  Rational v = f_(q);
  for (std::size_t j = 1; j < level; ++j) {
    v = (4 * v - g_value(j, q)) / 3;
    if (!in_unit_interval(v) && policy_ == ValidityPolicy::kStrict)
      throw CertificateViolation("f_" + std::to_string(j + 1) + to_string(q) + " = " + to_string(v) +
                                 " leaves [0,1]; t = " + std::to_string(schedule_.t(j)) + " is too small");
  }
  return v;
}

// ---------------------------------------------------------------------------

Program engine_program(std::shared_ptr<const LevelEngine> engine, std::string name) {
  const std::size_t arity = engine->arity();
  return Program::procedural(
      arity, [engine = std::move(engine)](CoinSource& source) { return engine->sample(source); }, std::move(name));
}

std::shared_ptr<LevelEngine> cube_engine(const TargetFunction& f, const LevelSchedule& schedule,
                                         ValidityPolicy policy, std::uint64_t work_limit) {
  const std::size_t n = f.arity;
  return std::make_shared<LevelEngine>(
      f, schedule, [n, work_limit](std::uint32_t t) { return cube_lattice(n, t, work_limit); }, policy);
}

Program general_factory(const TargetFunction& f, const LevelSchedule& schedule, std::uint64_t work_limit) {
  return engine_program(cube_engine(f, schedule, ValidityPolicy::kStrict, work_limit), "general(" + f.name + ")");
}

}  // namespace bfactory
