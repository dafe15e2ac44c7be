#include "bfactory/face.hpp"

namespace bfactory {

FacePartition FacePartition::from_sets(std::size_t n, const std::vector<std::size_t>& zero,
                                       const std::vector<std::size_t>& free,
                                       const std::vector<std::size_t>& one) {
  std::vector<int> seen(n, 0);
  std::vector<FaceRole> roles(n, FaceRole::kFree);
  auto assign = [&](const std::vector<std::size_t>& set, FaceRole role) {
    for (auto i : set) {
      if (i >= n) throw UsageError("face index " + std::to_string(i + 1) + " out of range");
      if (seen[i]++) throw UsageError("face sets are not disjoint at index " + std::to_string(i + 1));
      roles[i] = role;
    }
  };
  assign(zero, FaceRole::kZero);
  assign(free, FaceRole::kFree);
  assign(one, FaceRole::kOne);
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw UsageError("face sets do not cover index " + std::to_string(i + 1));
  }
  return FacePartition(std::move(roles));
}

bool FacePartition::contains(const RationalVector& p) const {
  if (p.size() != roles_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    switch (roles_[i]) {
      case FaceRole::kZero:
        if (p[i] != 0) return false;
        break;
      case FaceRole::kFree:
        if (p[i] <= 0 || p[i] >= 1) return false;
        break;
      case FaceRole::kOne:
        if (p[i] != 1) return false;
        break;
    }
  }
  return true;
}

std::vector<std::size_t> FacePartition::indices(FaceRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    if (roles_[i] == role) out.push_back(i);
  }
  return out;
}

std::string FacePartition::describe() const {
  auto set_text = [](const std::vector<std::size_t>& s) {
    std::string out = "{";
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j) out += ",";
      out += std::to_string(s[j] + 1);
    }
    return out + "}";
  };
  return "A=" + set_text(zero_set()) + " S=" + set_text(free_set()) + " B=" + set_text(one_set());
}

Rational face_poly(const FacePartition& face, const RationalVector& p) {
  if (p.size() != face.dimension()) throw UsageError("face_poly: dimension mismatch");
  Rational value = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    switch (face.role(i)) {
      case FaceRole::kZero:
        value *= 1 - p[i];
        break;
      case FaceRole::kFree:
        value *= p[i] * (1 - p[i]);
        break;
      case FaceRole::kOne:
        value *= p[i];
        break;
    }
  }
  return value;
}

}  // namespace bfactory
