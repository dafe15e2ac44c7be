#include <gtest/gtest.h>

#include <set>

#include "bfactory/faces.hpp"
#include "bfactory/lattice.hpp"
#include "bfactory/sampford.hpp"

using namespace bfactory;

namespace {

TargetFunction one_dim(std::function<Rational(const Rational&)> f, std::string name) {
  return TargetFunction{1, [f = std::move(f)](const RationalVector& x) { return f(x[0]); }, std::move(name)};
}

}  // namespace

TEST(Faces, EnumerationOrderAndCount) {
  auto faces = enum_faces(2);
  ASSERT_EQ(faces.size(), 9u);
  EXPECT_EQ(faces.front(), FacePartition({FaceRole::kZero, FaceRole::kZero}));
  EXPECT_EQ(faces[1], FacePartition({FaceRole::kZero, FaceRole::kFree}));
  EXPECT_EQ(faces.back(), FacePartition({FaceRole::kOne, FaceRole::kOne}));
  EXPECT_EQ(enum_faces(5).size(), 243u);
  EXPECT_EQ(std::set<FacePartition>(faces.begin(), faces.end()).size(), 9u);
}

// Every point lies in exactly one open face.
TEST(Faces, OpenFacesPartitionTheCube) {
  auto faces = enum_faces(3);
  for (const auto& p : grid_points(3, 4)) {
    int hits = 0;
    for (const auto& f : faces) hits += f.contains(p);
    EXPECT_EQ(hits, 1);
    EXPECT_TRUE(face_of(p).contains(p));
  }
}

TEST(Faces, ClosureAndFacePolynomial) {
  FacePartition f({FaceRole::kFree, FaceRole::kOne});
  auto closure = face_closure(f);
  ASSERT_EQ(closure.size(), 3u);
  for (const auto& g : closure) EXPECT_EQ(g.role(1), FaceRole::kOne);
  EXPECT_EQ(face_poly(f, {Rational(1, 3), Rational(1, 2)}), Rational(1, 3) * Rational(2, 3) * Rational(1, 2));
  EXPECT_EQ(f.describe(), "A={} S={1} B={2}");
}

TEST(PolyBounded, CubicTreeWithExactZeroFaces) {
  auto tree = cubic_example_tree({0, 0, 0});
  auto monos = leaf_monomials(tree, 1);
  auto f = builtin_function("cubic");
  auto report = check_poly_bounded(f, BoundCertificate(Rational(1), 2), 8, PolyBoundOptions{nullptr, &monos});
  EXPECT_TRUE(report.pass);
  ASSERT_EQ(report.faces.size(), 3u);
  EXPECT_EQ(report.faces[0].hypothesis, FaceHypothesis::kExactlyZero);
  EXPECT_EQ(report.faces[1].hypothesis, FaceHypothesis::kNonZero);
  EXPECT_EQ(report.faces[2].hypothesis, FaceHypothesis::kExactlyZero);
  EXPECT_EQ(report.faces[1].points_checked, 9u);
  // m = 1 is too weak near p = 1: p^2 (1-p) < p (1-p).
  EXPECT_FALSE(check_poly_bounded(f, BoundCertificate(Rational(1), 1), 8).pass);
}

// (p - 1/2)^2 vanishes inside the open interval without vanishing on it.
TEST(PolyBounded, InteriorZeroIsRejected) {
  auto f = one_dim([](const Rational& p) { return (p - Rational(1, 2)) * (p - Rational(1, 2)); }, "dip");
  auto report = check_poly_bounded(f, BoundCertificate(Rational(1, 1000), 4), 8);
  EXPECT_FALSE(report.pass);
  ASSERT_TRUE(report.faces[1].worst_point);
  EXPECT_EQ((*report.faces[1].worst_point)[0], Rational(1, 2));
  auto j = report.to_json();
  EXPECT_FALSE(j.at("pass").get<bool>());
  EXPECT_EQ(j.at("faces").size(), 3u);
}

TEST(PolyBounded, DomainRestrictedSampfordCertificate) {
  const auto domain = AffineCubeDomain::k_subset(3, 2);
  const auto cert = sampford_bound_cert(3, 2);
  EXPECT_EQ(cert.c, Rational(1, 6));
  for (const auto& u : k_subsets(3, 2)) {
    auto report = check_poly_bounded(fbar_function(3, u), cert, 8, PolyBoundOptions{&domain, nullptr});
    EXPECT_TRUE(report.pass) << subset_label(u);
    for (const auto& face : report.faces)
      if (face.hypothesis == FaceHypothesis::kNonZero)
        for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(face.worst_point.has_value());
  }
}

TEST(PolyBounded, CertificateValidation) {
  EXPECT_THROW(BoundCertificate(Rational(0), 1), UsageError);
  EXPECT_THROW(BoundCertificate(Rational(-1, 2), 1), UsageError);
}

TEST(DomainGrid, RestrictsToK) {
  auto domain = AffineCubeDomain::k_subset(3, 2);
  auto pts = domain_grid(3, 2, &domain);
  std::size_t expected = 0;
  for (const auto& p : grid_points(3, 2)) expected += domain.contains(p);
  EXPECT_EQ(pts.size(), expected);
  EXPECT_EQ(pts.size(), 6u);
  EXPECT_EQ(domain_grid(2, 4).size(), 25u);
}

TEST(OneDim, ConstantsIdentityAndSquares) {
  auto half = check_1d(constant_function(1, Rational(1, 2)), 0, 8);
  EXPECT_TRUE(half.pass);
  EXPECT_TRUE(half.constant);
  EXPECT_TRUE(check_1d(builtin_function("identity"), 1, 8).pass);
  EXPECT_FALSE(check_1d(builtin_function("square"), 1, 8).pass);
  EXPECT_TRUE(check_1d(builtin_function("square"), 2, 8).pass);
}

TEST(OneDim, ImpliedExponent) {
  EXPECT_EQ(implied_1d_exponent(BoundCertificate(Rational(1), 1)), 2u);
  EXPECT_EQ(implied_1d_exponent(BoundCertificate(Rational(1, 8), 2)), 7u);
  EXPECT_EQ(implied_1d_exponent(BoundCertificate(Rational(1, 3), 1)), 4u);
  EXPECT_EQ(implied_1d_exponent(BoundCertificate(Rational(2), 1)), 2u);
}

// Property: a face certificate for f and 1-f implies the one-dimensional bound.
TEST(OneDim, FaceCertificateImpliesOneDimBound) {
  std::vector<std::pair<TargetFunction, BoundCertificate>> cases{
      {builtin_function("identity"), BoundCertificate(Rational(1), 1)},
      {builtin_function("affine-quarter"), BoundCertificate(Rational(1, 4), 1)},
      {one_dim([](const Rational& p) { return (1 + p * p) / 3; }, "bump"), BoundCertificate(Rational(1, 3), 1)},
      {one_dim([](const Rational& p) { return p * (1 - p); }, "hill"), BoundCertificate(Rational(1), 1)}};
  for (const auto& [f, cert] : cases) {
    for (unsigned mesh : {8u, 12u}) {
      bool face_ok = check_poly_bounded(f, cert, mesh).pass && check_poly_bounded(complement(f), cert, mesh).pass;
      if (!face_ok) continue;
      EXPECT_TRUE(check_1d(f, implied_1d_exponent(cert), mesh).pass) << f.name << " mesh " << mesh;
    }
  }
}
