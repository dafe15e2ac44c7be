#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfactory/face.hpp"
#include "bfactory/factory.hpp"
#include "bfactory/json_io.hpp"
#include "bfactory/lattice.hpp"
#include "bfactory/subdomain.hpp"

namespace bfactory {

/// All 3^n open faces, in base-3 order over coordinates (first coordinate most
/// significant, zero < free < one).
std::vector<FacePartition> enum_faces(std::size_t n);

/// The open face containing p.
FacePartition face_of(const RationalVector& p);

/// Faces F' in the closure of F: zero and one roles kept, free roles take any value.
std::vector<FacePartition> face_closure(const FacePartition& face);

/// f(p) >= c * face_poly(face, p)^m.
struct BoundCertificate {
  Rational c;
  unsigned m = 0;

  BoundCertificate(Rational c_, unsigned m_);
};

enum class FaceHypothesis : std::uint8_t {
  kNoPoints,     // no grid point of the face (inside K) to test
  kGridZero,     // f vanished at every sampled point of the face
  kExactlyZero,  // no 1-leaf path of the tree is reachable on the face
  kNonZero,      // some point of the face has f > 0
};

std::string to_string(FaceHypothesis hypothesis);

struct FaceReport {
  FacePartition face;
  FaceHypothesis hypothesis = FaceHypothesis::kNoPoints;
  bool pass = true;
  std::optional<RationalVector> worst_point;
  std::optional<Rational> worst_margin;  // min of f(p) - c face_poly^m over the tested points
  std::size_t points_checked = 0;
};

struct PolyBoundReport {
  std::vector<FaceReport> faces;
  bool pass = true;

  Json to_json() const;
};

struct PolyBoundOptions {
  /// Restrict every check to grid points of K.
  const AffineCubeDomain* domain = nullptr;
  /// Monomials of a finite tree computing f; they decide the zero hypothesis exactly.
  const std::vector<BernsteinMonomial>* monomials = nullptr;
};

/// Grid check of polynomial boundedness on the mesh 1/mesh_d. Evidence, not proof.
PolyBoundReport check_poly_bounded(const TargetFunction& f, const BoundCertificate& cert, unsigned mesh_d,
                                   const PolyBoundOptions& options = {});

struct OneDimReport {
  bool pass = true;
  bool constant = false;
  std::optional<Rational> worst_point;
  std::optional<Rational> worst_margin;  // min over the grid of the slack on either side

  Json to_json() const;
};

/// min(p,1-p)^m <= f(p) <= 1 - min(p,1-p)^m on the grid, or f constant on the grid.
OneDimReport check_1d(const TargetFunction& f, unsigned m, unsigned mesh_d);

/// ceil(log2(1/c)) + 2m, clamped below at 2m: the one-dimensional exponent implied by a face certificate.
unsigned implied_1d_exponent(const BoundCertificate& cert);

/// Grid points of mesh 1/d, optionally restricted to K.
std::vector<RationalVector> domain_grid(std::size_t n, unsigned d, const AffineCubeDomain* domain = nullptr);

}  // namespace bfactory
