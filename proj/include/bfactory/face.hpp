#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfactory/rational.hpp"

namespace bfactory {

/// Role of one coordinate in an open face of the hypercube.
enum class FaceRole : std::uint8_t {
  kZero,  // p_i = 0   (index in A)
  kFree,  // 0 < p_i < 1 (index in S)
  kOne,   // p_i = 1   (index in B)
};

/// An open face F_{A,S,B} of [0,1]^n, stored as one role per coordinate.
class FacePartition {
 public:
  FacePartition() = default;
  explicit FacePartition(std::vector<FaceRole> roles) : roles_(std::move(roles)) {}

  /// Builds a face from 0-based index sets; they must partition [0, n).
  static FacePartition from_sets(std::size_t n, const std::vector<std::size_t>& zero,
                                 const std::vector<std::size_t>& free,
                                 const std::vector<std::size_t>& one);

  std::size_t dimension() const { return roles_.size(); }
  FaceRole role(std::size_t i) const { return roles_[i]; }
  const std::vector<FaceRole>& roles() const { return roles_; }

  std::vector<std::size_t> zero_set() const { return indices(FaceRole::kZero); }
  std::vector<std::size_t> free_set() const { return indices(FaceRole::kFree); }
  std::vector<std::size_t> one_set() const { return indices(FaceRole::kOne); }

  /// True when `p` lies in this open face.
  bool contains(const RationalVector& p) const;

  /// e.g. "A={1} S={2,3} B={}" with 1-based indices.
  std::string describe() const;

  friend bool operator==(const FacePartition&, const FacePartition&) = default;
  friend auto operator<=>(const FacePartition&, const FacePartition&) = default;

 private:
  std::vector<std::size_t> indices(FaceRole role) const;

  std::vector<FaceRole> roles_;
};

/// (1-p)^A * p^S (1-p)^S * p^B, before raising to the certificate exponent.
Rational face_poly(const FacePartition& face, const RationalVector& p);

}  // namespace bfactory
