#include "bfactory/faces.hpp"

#include <map>

namespace bfactory {

std::vector<FacePartition> enum_faces(std::size_t n) {
  if (n == 0) throw UsageError("enum_faces needs n >= 1");
  if (n > 20) throw ResourceError("3^" + std::to_string(n) + " faces is too many to enumerate");
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  std::vector<FacePartition> faces;
  faces.reserve(total);
  std::vector<FaceRole> roles(n);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t i = n; i-- > 0;) {
      roles[i] = static_cast<FaceRole>(rest % 3);
      rest /= 3;
    }
    faces.emplace_back(roles);
  }
  return faces;
}

FacePartition face_of(const RationalVector& p) {
  if (!in_unit_cube(p)) throw UsageError("face_of: " + to_string(p) + " is outside [0,1]^n");
  std::vector<FaceRole> roles;
  roles.reserve(p.size());
  for (const auto& x : p) roles.push_back(x == 0 ? FaceRole::kZero : x == 1 ? FaceRole::kOne : FaceRole::kFree);
  return FacePartition(std::move(roles));
}

std::vector<FacePartition> face_closure(const FacePartition& face) {
  std::vector<FacePartition> out{face};
  for (std::size_t i = 0; i < face.dimension(); ++i) {
    if (face.role(i) != FaceRole::kFree) continue;
    std::vector<FacePartition> next;
    for (const auto& g : out)
      for (FaceRole r : {FaceRole::kZero, FaceRole::kFree, FaceRole::kOne}) {
        auto roles = g.roles();
        roles[i] = r;
        next.emplace_back(std::move(roles));
      }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

BoundCertificate::BoundCertificate(Rational c_, unsigned m_) : c(std::move(c_)), m(m_) {
  if (c <= 0) throw UsageError("certificate constant c must be positive");
}

std::string to_string(FaceHypothesis hypothesis) {
  switch (hypothesis) {
    case FaceHypothesis::kNoPoints:
      return "no-points";
    case FaceHypothesis::kGridZero:
      return "grid-zero";
    case FaceHypothesis::kExactlyZero:
      return "exactly-zero";
    case FaceHypothesis::kNonZero:
      return "non-zero";
  }
  return "unknown";
}

std::vector<RationalVector> domain_grid(std::size_t n, unsigned d, const AffineCubeDomain* domain) {
  if (d == 0) throw UsageError("grid mesh needs d >= 1");
  if (domain && domain->n() != n) throw UsageError("domain dimension does not match the function");
  auto grid = grid_points(n, d);
  if (!domain) return grid;
  std::vector<RationalVector> kept;
  for (auto& x : grid)
    if (domain->contains(x)) kept.push_back(std::move(x));
  return kept;
}

namespace {

bool reachable_on(const BernsteinMonomial& mono, const FacePartition& face) {
  if (mono.coeff == 0) return false;
  for (std::size_t i = 0; i < face.dimension(); ++i) {
    if (mono.p_power[i] > 0 && face.role(i) == FaceRole::kZero) return false;
    if (mono.q_power[i] > 0 && face.role(i) == FaceRole::kOne) return false;
  }
  return true;
}

}  // namespace

PolyBoundReport check_poly_bounded(const TargetFunction& f, const BoundCertificate& cert, unsigned mesh_d,
                                   const PolyBoundOptions& options) {
  const std::size_t n = f.arity;
  auto grid = domain_grid(n, mesh_d, options.domain);
  std::vector<Rational> values;
  values.reserve(grid.size());
  std::map<FacePartition, std::vector<std::size_t>> on_face;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.push_back(f(grid[i]));
    on_face[face_of(grid[i])].push_back(i);
  }
  if (options.monomials)
    for (const auto& mono : *options.monomials)
      if (mono.p_power.size() != n || mono.q_power.size() != n)
        throw UsageError("monomial arity does not match the function");

  PolyBoundReport report;
  for (auto& face : enum_faces(n)) {
    FaceReport fr;
    fr.face = face;
    auto it = on_face.find(face);
    if (it == on_face.end()) {
      fr.hypothesis = FaceHypothesis::kNoPoints;
    } else if (options.monomials) {
      bool any = false;
      for (const auto& mono : *options.monomials) any = any || reachable_on(mono, face);
      fr.hypothesis = any ? FaceHypothesis::kNonZero : FaceHypothesis::kExactlyZero;
    } else {
      bool positive = false;
      for (auto i : it->second) positive = positive || values[i] > 0;
      fr.hypothesis = positive ? FaceHypothesis::kNonZero : FaceHypothesis::kGridZero;
    }
    if (fr.hypothesis == FaceHypothesis::kNonZero) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        Rational margin = values[i] - cert.c * pow(face_poly(face, grid[i]), cert.m);
        if (!fr.worst_margin || margin < *fr.worst_margin) {
          fr.worst_margin = margin;
          fr.worst_point = grid[i];
        }
      }
      fr.points_checked = grid.size();
      fr.pass = !fr.worst_margin || *fr.worst_margin >= 0;
    }
    report.pass = report.pass && fr.pass;
    report.faces.push_back(std::move(fr));
  }
  return report;
}

Json PolyBoundReport::to_json() const {
  Json faces_json = Json::array();
  for (const auto& fr : faces) {
    Json entry{{"face", fr.face.describe()},
               {"hypothesis", bfactory::to_string(fr.hypothesis)},
               {"pass", fr.pass},
               {"points_checked", fr.points_checked}};
    entry["worst_point"] = fr.worst_point ? bfactory::to_json(*fr.worst_point) : Json(nullptr);
    entry["worst_margin"] = fr.worst_margin ? bfactory::to_json(*fr.worst_margin) : Json(nullptr);
    faces_json.push_back(std::move(entry));
  }
  return Json{{"pass", pass}, {"faces", faces_json}};
}

OneDimReport check_1d(const TargetFunction& f, unsigned m, unsigned mesh_d) {
  if (f.arity != 1) throw UsageError("check_1d needs a function of one variable");
  auto grid = domain_grid(1, mesh_d);
  std::vector<Rational> values;
  for (const auto& x : grid) values.push_back(f(x));
  OneDimReport report;
  report.constant = std::all_of(values.begin(), values.end(), [&](const Rational& v) { return v == values.front(); });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Rational& p = grid[i][0];
    Rational floor_value = pow(std::min(p, Rational(1 - p)), m);
    Rational margin = std::min(Rational(values[i] - floor_value), Rational(1 - floor_value - values[i]));
    if (!report.worst_margin || margin < *report.worst_margin) {
      report.worst_margin = margin;
      report.worst_point = p;
    }
  }
  report.pass = report.constant || *report.worst_margin >= 0;
  return report;
}

Json OneDimReport::to_json() const {
  return Json{{"pass", pass},
              {"constant", constant},
              {"worst_point", worst_point ? bfactory::to_json(*worst_point) : Json(nullptr)},
              {"worst_margin", worst_margin ? bfactory::to_json(*worst_margin) : Json(nullptr)}};
}

unsigned implied_1d_exponent(const BoundCertificate& cert) {
  // Smallest k >= 0 with 2^k >= 1/c.
  unsigned k = 0;
  Rational power = 1;
  while (power * cert.c < 1) {
    power *= 2;
    ++k;
  }
  return k + 2 * cert.m;
}

}  // namespace bfactory
