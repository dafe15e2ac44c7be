#include "bfactory/subdomain.hpp"

#include <algorithm>

#include "bfactory/bounds.hpp"
#include "bfactory/lp.hpp"

namespace bfactory {

namespace {

Rational magnitude(const Rational& x) { return x < 0 ? Rational(-x) : x; }

Rational linf_distance(const RationalVector& a, const RationalVector& b) {
  Rational d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, magnitude(a[i] - b[i]));
  return d;
}

void check_cube_point(const AffineCubeDomain& domain, const RationalVector& x) {
  if (x.size() != domain.n()) throw UsageError("point has " + std::to_string(x.size()) + " coordinates, domain has " +
                                               std::to_string(domain.n()));
  if (!in_unit_cube(x)) throw UsageError("point " + to_string(x) + " is outside [0,1]^n");
}

}  // namespace

AffineCubeDomain::AffineCubeDomain(std::size_t n, std::vector<RationalVector> M, RationalVector b)
    : n_(n), M_(std::move(M)), b_(std::move(b)) {
  if (n_ == 0) throw UsageError("domain needs n >= 1");
  if (M_.size() != b_.size()) throw UsageError("domain needs one right-hand side per row of M");
  for (const auto& row : M_)
    if (row.size() != n_) throw UsageError("every row of M needs n entries");

  // Feasibility: M y = b, y + s = 1, y, s >= 0.
  LinearProgram lp;
  const std::size_t r = M_.size();
  lp.A.assign(r + n_, RationalVector(2 * n_, Rational(0)));
  lp.b.assign(r + n_, Rational(0));
  lp.c.assign(2 * n_, Rational(0));
  for (std::size_t i = 0; i < r; ++i) {
    std::copy(M_[i].begin(), M_[i].end(), lp.A[i].begin());
    lp.b[i] = b_[i];
  }
  for (std::size_t i = 0; i < n_; ++i) {
    lp.A[r + i][i] = 1;
    lp.A[r + i][n_ + i] = 1;
    lp.b[r + i] = 1;
  }
  LpResult feasible = solve_lp(lp);
  if (!feasible.optimal()) throw UsageError("domain {x in [0,1]^n : Mx = b} is empty");

  reduced_ = M_;
  for (std::size_t i = 0; i < r; ++i) reduced_[i].push_back(b_[i]);
  auto pivots = row_reduce(reduced_);
  // Pivots never land in the b column because the system is feasible.
  std::vector<RationalVector> coefficients;
  for (const auto& row : reduced_) coefficients.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n_));

  const std::size_t rk = reduced_.size();
  if (rk == 0) {
    shape_ = Shape::kCube;
  } else if (rk == n_) {
    shape_ = Shape::kPoint;
    base_.assign(n_, Rational(0));
    for (std::size_t i = 0; i < rk; ++i) base_[pivots[i]] = reduced_[i][n_];
  } else if (rk == 1) {
    shape_ = Shape::kHyperplane;
  } else if (n_ - rk == 1) {
    shape_ = Shape::kLine;
    base_.assign(n_, Rational(0));
    for (std::size_t i = 0; i < rk; ++i) base_[pivots[i]] = reduced_[i][n_];
    direction_ = null_space(coefficients, n_).front();
    bool first = true;
    for (std::size_t i = 0; i < n_; ++i) {
      if (direction_[i] == 0) continue;
      Rational a = (0 - base_[i]) / direction_[i];
      Rational c = (1 - base_[i]) / direction_[i];
      if (a > c) std::swap(a, c);
      if (first || a > s_lo_) s_lo_ = a;
      if (first || c < s_hi_) s_hi_ = c;
      first = false;
    }
  } else {
    shape_ = Shape::kGeneral;
  }
}

AffineCubeDomain AffineCubeDomain::cube(std::size_t n) { return AffineCubeDomain(n, {}, {}); }

AffineCubeDomain AffineCubeDomain::k_subset(std::size_t n, std::size_t k) {
  if (k > n) throw UsageError("k-subset domain needs k <= n");
  return AffineCubeDomain(n, {RationalVector(n, Rational(1))}, {Rational(static_cast<long>(k))});
}

AffineCubeDomain AffineCubeDomain::birkhoff(std::size_t m) {
  if (m == 0) throw UsageError("Birkhoff domain needs m >= 1");
  const std::size_t n = m * m;
  std::vector<RationalVector> M;
  for (std::size_t r = 0; r < m; ++r) {
    RationalVector row(n, Rational(0));
    for (std::size_t c = 0; c < m; ++c) row[r * m + c] = 1;
    M.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < m; ++c) {
    RationalVector col(n, Rational(0));
    for (std::size_t r = 0; r < m; ++r) col[r * m + c] = 1;
    M.push_back(std::move(col));
  }
  return AffineCubeDomain(n, std::move(M), RationalVector(2 * m, Rational(1)));
}

AffineCubeDomain AffineCubeDomain::from_json(const Json& json) {
  if (!json.is_object() || !json.contains("n")) throw UsageError("domain JSON needs \"n\"");
  auto n = json.at("n").get<std::size_t>();
  std::vector<RationalVector> M;
  if (json.contains("M"))
    for (const auto& row : json.at("M")) M.push_back(rational_vector_from_json(row));
  RationalVector b = json.contains("b") ? rational_vector_from_json(json.at("b")) : RationalVector{};
  return AffineCubeDomain(n, std::move(M), std::move(b));
}

Json AffineCubeDomain::to_json() const {
  Json rows = Json::array();
  for (const auto& row : M_) rows.push_back(bfactory::to_json(row));
  return Json{{"n", n_}, {"M", rows}, {"b", bfactory::to_json(b_)}};
}

bool AffineCubeDomain::contains(const RationalVector& x) const {
  if (x.size() != n_ || !in_unit_cube(x)) return false;
  for (std::size_t i = 0; i < M_.size(); ++i) {
    Rational s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += M_[i][j] * x[j];
    if (s != b_[i]) return false;
  }
  return true;
}

Rational AffineCubeDomain::residual_bound(const RationalVector& x) const {
  Rational bound = 0;
  for (const auto& row : reduced_) {
    Rational s = -row[n_];
    Rational norm = 0;
    for (std::size_t j = 0; j < n_; ++j) {
      s += row[j] * x[j];
      norm += magnitude(row[j]);
    }
    bound = std::max(bound, magnitude(s) / norm);
  }
  return bound;
}

// ---------------------------------------------------------------------------

struct Projector {
  static Projection hyperplane(const AffineCubeDomain& d, const RationalVector& x) {
    const std::size_t n = d.n_;
    const RationalVector& row = d.reduced_.front();
    const Rational& beta = row[n];
    Rational s0 = 0;
    for (std::size_t i = 0; i < n; ++i) s0 += row[i] * x[i];
    if (s0 == beta) return Projection{x, 0};

    // Moving coordinate i by up to `room` changes m.x by |m_i| per unit, in the needed direction.
    const bool up = beta > s0;
    std::vector<std::pair<Rational, Rational>> pieces;  // (room, rate)
    for (std::size_t i = 0; i < n; ++i) {
      if (row[i] == 0) continue;
      bool increase = (row[i] > 0) == up;
      Rational room = increase ? Rational(1 - x[i]) : x[i];
      if (room > 0) pieces.emplace_back(room, magnitude(row[i]));
    }
    std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Rational need = magnitude(beta - s0);
    Rational rate = 0;
    for (const auto& piece : pieces) rate += piece.second;
    Rational r = 0, gained = 0;
    std::size_t next = 0;
    for (;;) {
      Rational stop = next < pieces.size() ? pieces[next].first : r;
      Rational reachable = gained + rate * (stop - r);
      if (reachable >= need || next == pieces.size()) {
        r += (need - gained) / rate;
        break;
      }
      gained = reachable;
      r = stop;
      rate -= pieces[next].second;
      ++next;
      while (next < pieces.size() && pieces[next].first == r) rate -= pieces[next++].second;
      if (rate == 0) throw CertificateViolation("hyperplane projection ran out of room in a non-empty domain");
    }

    // Lexicographically smallest y in the box of radius r with m.y = beta.
    std::vector<Rational> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::max(Rational(0), Rational(x[i] - r));
      hi[i] = std::min(Rational(1), Rational(x[i] + r));
    }
    std::vector<Rational> low_suffix(n + 1, Rational(0)), high_suffix(n + 1, Rational(0));
    for (std::size_t i = n; i-- > 0;) {
      Rational a = row[i] * lo[i], b = row[i] * hi[i];
      low_suffix[i] = low_suffix[i + 1] + std::min(a, b);
      high_suffix[i] = high_suffix[i + 1] + std::max(a, b);
    }
    RationalVector y(n);
    Rational acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Rational rem = beta - acc;
      if (row[i] == 0) {
        y[i] = lo[i];
      } else if (row[i] > 0) {
        y[i] = std::max(lo[i], Rational((rem - high_suffix[i + 1]) / row[i]));
      } else {
        y[i] = std::max(lo[i], Rational((rem - low_suffix[i + 1]) / row[i]));
      }
      acc += row[i] * y[i];
    }
    return Projection{std::move(y), r};
  }

  static Projection line(const AffineCubeDomain& d, const RationalVector& x) {
    const std::size_t n = d.n_;
    RationalVector a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = d.base_[i] - x[i];
    const RationalVector& dir = d.direction_;
    auto phi = [&](const Rational& s) {
      Rational m = 0;
      for (std::size_t i = 0; i < n; ++i) m = std::max(m, magnitude(a[i] + s * dir[i]));
      return m;
    };
    std::vector<Rational> candidates{d.s_lo_, d.s_hi_};
    auto consider = [&](const Rational& s) {
      if (s >= d.s_lo_ && s <= d.s_hi_) candidates.push_back(s);
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (dir[i] != 0) consider(-a[i] / dir[i]);
      for (std::size_t j = i + 1; j < n; ++j) {
        if (dir[i] != dir[j]) consider((a[j] - a[i]) / (dir[i] - dir[j]));
        if (dir[i] + dir[j] != 0) consider(-(a[i] + a[j]) / (dir[i] + dir[j]));
      }
    }
    std::optional<Rational> best, s_min, s_max;
    for (const auto& s : candidates) {
      Rational v = phi(s);
      if (!best || v < *best) {
        best = v;
        s_min = s_max = s;
      } else if (v == *best) {
        s_min = std::min(*s_min, s);
        s_max = std::max(*s_max, s);
      }
    }
    // y is affine in s, so the lexicographic order along the segment follows the first nonzero direction entry.
    bool forward = true;
    for (const auto& v : dir)
      if (v != 0) {
        forward = v > 0;
        break;
      }
    Rational s = forward ? *s_min : *s_max;
    RationalVector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = d.base_[i] + s * dir[i];
    return Projection{std::move(y), *best};
  }
};

Projection linf_project_lp(const AffineCubeDomain& domain, const RationalVector& x) {
  check_cube_point(domain, x);
  const std::size_t n = domain.n();
  const std::size_t r = domain.M().size();
  // Columns: y (n), radius, u (n), v (n), slack (n).
  const std::size_t cols = 4 * n + 1;
  const std::size_t radius = n;
  LinearProgram lp;
  lp.c.assign(cols, Rational(0));
  lp.c[radius] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    RationalVector below(cols, Rational(0)), above(cols, Rational(0)), box(cols, Rational(0));
    below[i] = 1;  // y_i - r + u_i = x_i
    below[radius] = -1;
    below[n + 1 + i] = 1;
    above[i] = 1;  // y_i + r - v_i = x_i
    above[radius] = 1;
    above[2 * n + 1 + i] = -1;
    box[i] = 1;  // y_i + s_i = 1
    box[3 * n + 1 + i] = 1;
    lp.A.push_back(std::move(below));
    lp.b.push_back(x[i]);
    lp.A.push_back(std::move(above));
    lp.b.push_back(x[i]);
    lp.A.push_back(std::move(box));
    lp.b.push_back(1);
  }
  for (std::size_t k = 0; k < r; ++k) {
    RationalVector row(cols, Rational(0));
    std::copy(domain.M()[k].begin(), domain.M()[k].end(), row.begin());
    lp.A.push_back(std::move(row));
    lp.b.push_back(domain.b()[k]);
  }
  std::vector<RationalVector> tie_breaks;
  for (std::size_t i = 0; i < n; ++i) {
    RationalVector e(cols, Rational(0));
    e[i] = 1;
    tie_breaks.push_back(std::move(e));
  }
  LpResult result = solve_lp(lp, tie_breaks);
  if (!result.optimal()) throw CertificateViolation("projection LP failed on a non-empty domain");
  RationalVector y(result.x.begin(), result.x.begin() + static_cast<std::ptrdiff_t>(n));
  return Projection{std::move(y), result.value};
}

Projection linf_project(const AffineCubeDomain& domain, const RationalVector& x) {
  check_cube_point(domain, x);
  switch (domain.shape_) {
    case AffineCubeDomain::Shape::kCube:
      return Projection{x, 0};
    case AffineCubeDomain::Shape::kPoint:
      return Projection{domain.base_, linf_distance(domain.base_, x)};
    case AffineCubeDomain::Shape::kHyperplane:
      return Projector::hyperplane(domain, x);
    case AffineCubeDomain::Shape::kLine:
      return Projector::line(domain, x);
    case AffineCubeDomain::Shape::kGeneral:
      break;
  }
  if (domain.contains(x)) return Projection{x, 0};
  return linf_project_lp(domain, x);
}

bool within_ball(const AffineCubeDomain& domain, const RationalVector& x, const Rational& eps) {
  if (eps <= 0) throw UsageError("eps must be positive");
  check_cube_point(domain, x);
  if (domain.contains(x)) return true;
  if (domain.residual_bound(x) >= eps) return false;
  return linf_project(domain, x).distance < eps;
}

// ---------------------------------------------------------------------------

ZSample sample_Z(CoinSource& source, const AffineCubeDomain& domain, std::uint32_t t, const Rational& eps,
                 const FlipBudget& budget) {
  if (t == 0) throw UsageError("t must be positive");
  if (eps <= 0) throw UsageError("eps must be positive");
  if (source.num_coins() < domain.n()) throw UsageError("domain has more coordinates than the bank has coins");
  MeteredSource metered(source, budget);
  ZSample out;
  try {
    for (;;) {
      ++out.attempts;
      RationalVector mean(domain.n());
      for (std::size_t i = 0; i < domain.n(); ++i) {
        std::uint32_t c = 0;
        for (std::uint32_t j = 0; j < t; ++j) c += metered.flip(i);
        mean[i] = Rational(Integer(c), Integer(t));
      }
      if (within_ball(domain, mean, eps)) {
        out.point = linf_project(domain, mean).point;
        break;
      }
    }
  } catch (const BudgetExhaustedSignal&) {
  }
  out.flips_used = metered.flips_used();
  return out;
}

namespace {

// Integer form of the residual test: rejects counts c whose mean c/t has residual_bound >= eps.
// Empty when the coefficients do not fit comfortably in 64 bits.
CountFilter residual_prefilter(const std::vector<RationalVector>& reduced, std::size_t n, std::uint32_t t,
                               const Rational& eps) {
  struct Row {
    std::vector<std::int64_t> m;
    __int128 beta_t;
    __int128 threshold;
  };
  const Integer limit = Integer(1) << 40;
  std::vector<Row> rows;
  const Integer en = numerator(eps), ed = denominator(eps);
  if (en > limit || ed > limit) return {};
  for (const auto& full : reduced) {
    Integer scale = common_denominator(full);
    Row row;
    Integer norm = 0;
    for (std::size_t j = 0; j < n; ++j) {
      Integer v = numerator(full[j] * scale);
      if (boost::multiprecision::abs(v) > limit) return {};
      row.m.push_back(v.convert_to<std::int64_t>());
      norm += boost::multiprecision::abs(v);
    }
    Integer beta = numerator(full[n] * scale);
    if (boost::multiprecision::abs(beta) > limit || norm > limit) return {};
    row.beta_t = static_cast<__int128>(beta.convert_to<std::int64_t>()) * t;
    row.threshold = static_cast<__int128>(en.convert_to<std::int64_t>()) * t * norm.convert_to<std::int64_t>();
    rows.push_back(std::move(row));
  }
  const std::int64_t den = ed.convert_to<std::int64_t>();
  return [rows = std::move(rows), den](const std::vector<std::uint32_t>& counts) {
    for (const auto& row : rows) {
      __int128 s = -row.beta_t;
      for (std::size_t j = 0; j < counts.size(); ++j) s += static_cast<__int128>(row.m[j]) * counts[j];
      if (s < 0) s = -s;
      if (s * den >= row.threshold) return false;
    }
    return true;
  };
}

}  // namespace

ProjectedLattice subdomain_lattice(const AffineCubeDomain& domain, std::uint32_t t, const Rational& eps,
                                   std::uint64_t work_limit) {
  if (eps <= 0) throw UsageError("eps must be positive");
  return build_lattice(
      domain.n(), t,
      [&](const RationalVector& y) -> std::optional<RationalVector> {
        if (domain.contains(y)) return y;
        if (domain.residual_bound(y) >= eps) return std::nullopt;
        Projection p = linf_project(domain, y);
        if (p.distance >= eps) return std::nullopt;
        return std::move(p.point);
      },
      work_limit, residual_prefilter(domain.reduced_, domain.n(), t, eps));
}

std::shared_ptr<const ProjectedLattice> AffineCubeDomain::lattice(std::uint32_t t, const Rational& eps,
                                                                  std::uint64_t work_limit) const {
  std::lock_guard lock(cache_->mutex);
  auto key = std::make_pair(t, eps);
  auto it = cache_->lattices.find(key);
  if (it != cache_->lattices.end()) return it->second;
  auto built = std::make_shared<const ProjectedLattice>(subdomain_lattice(*this, t, eps, work_limit));
  cache_->lattices.emplace(key, built);
  return built;
}

Lemma52Report lemma52_check(const AffineCubeDomain& domain, const RationalVector& p, std::uint32_t t,
                            const Rational& eps, const std::function<bool(const LatticePoint&)>& event,
                            std::uint64_t work_limit) {
  check_cube_point(domain, p);
  const std::size_t n = domain.n();
  ProjectedLattice accepted = *domain.lattice(t, eps, work_limit);
  ProjectedLattice everything = cube_lattice(n, t, work_limit);
  PointWeights w = point_weights(p, t);

  auto in_event = [&](const ProjectedLattice& lat) {
    std::vector<std::uint8_t> mask(lat.accepted());
    LatticePoint x{t, std::vector<std::uint32_t>(n)};
    for (std::size_t a = 0; a < lat.accepted(); ++a) {
      auto c = lat.entry(a);
      std::copy(c.begin(), c.end(), x.counts.begin());
      mask[a] = event(x);
    }
    return mask;
  };
  Lemma52Report report;
  Integer accept_mass = accepted.weighted_sum(w);
  if (accept_mass == 0) throw DomainError("no realization within eps of K is reachable from " + to_string(p));
  report.acceptance = Rational(accept_mass, w.scale);
  report.conditioned = Rational(accepted.weighted_sum(w, in_event(accepted)), accept_mass);
  report.unconditioned = Rational(everything.weighted_sum(w, in_event(everything)), w.scale);
  report.holds = report.conditioned <= 2 * report.unconditioned;
  // 2 eps^2 t >= log(8n), decided only when the enclosure of log(8n) is on one side.
  Rational lhs = 2 * eps * eps * Rational(Integer(t));
  report.precondition = lhs >= log_interval(Rational(Integer(8 * n))).hi;
  return report;
}

// ---------------------------------------------------------------------------

std::shared_ptr<LevelEngine> subdomain_engine(const TargetFunction& f, const AffineCubeDomain& domain,
                                              const LevelSchedule& schedule, const Rational& eps,
                                              ValidityPolicy policy, std::uint64_t work_limit) {
  if (eps <= 0) throw UsageError("eps must be positive");
  if (f.arity != domain.n()) throw UsageError("target arity does not match the domain");
  return std::make_shared<LevelEngine>(
      f, schedule, [domain, eps, work_limit](std::uint32_t t) { return *domain.lattice(t, eps, work_limit); },
      policy);
}

Program subdomain_factory(const TargetFunction& f, const AffineCubeDomain& domain, const LevelSchedule& schedule,
                          const Rational& eps, ValidityPolicy policy, std::uint64_t work_limit) {
  return engine_program(subdomain_engine(f, domain, schedule, eps, policy, work_limit), "subdomain(" + f.name + ")");
}

}  // namespace bfactory
