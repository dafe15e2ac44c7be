#pragma once

#include <optional>
#include <vector>

#include "bfactory/rational.hpp"

namespace bfactory {

/// minimize c.x subject to A x = b, x >= 0, over exact rationals.
struct LinearProgram {
  std::vector<RationalVector> A;
  RationalVector b;
  RationalVector c;
};

struct LpResult {
  enum class Status : std::uint8_t { kOptimal, kInfeasible, kUnbounded };

  Status status = Status::kInfeasible;
  RationalVector x;
  Rational value;

  bool optimal() const { return status == Status::kOptimal; }
};

/// Two-phase dense tableau simplex with Bland's rule.
///
/// When `tie_breaks` is non-empty, each objective in turn is minimized over the
/// optimal face of the previous ones, which yields a lexicographic optimum.
LpResult solve_lp(const LinearProgram& lp, const std::vector<RationalVector>& tie_breaks = {});

/// Row-reduced echelon form of M (in place); returns the pivot columns.
std::vector<std::size_t> row_reduce(std::vector<RationalVector>& M);

/// Rank over the rationals.
std::size_t rank(std::vector<RationalVector> M);

/// A basis of {z : M z = 0}, one vector per free column of the echelon form.
std::vector<RationalVector> null_space(std::vector<RationalVector> M, std::size_t columns);

/// Solves the square system M x = b exactly; empty when M is singular.
std::optional<RationalVector> solve_square(std::vector<RationalVector> M, RationalVector b);

}  // namespace bfactory
