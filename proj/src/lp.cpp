#include "bfactory/lp.hpp"

#include <optional>

namespace bfactory {

namespace {

class Tableau {
 public:
  Tableau(std::vector<RationalVector> rows, RationalVector rhs, std::size_t columns)
      : rows_(std::move(rows)), rhs_(std::move(rhs)), allowed_(columns, true), basis_(rows_.size()) {}

  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return allowed_.size(); }

  void set_basis(std::size_t row, std::size_t column) { basis_[row] = column; }
  std::size_t basic(std::size_t row) const { return basis_[row]; }
  const Rational& rhs(std::size_t row) const { return rhs_[row]; }
  const Rational& at(std::size_t row, std::size_t column) const { return rows_[row][column]; }
  void forbid(std::size_t column) { allowed_[column] = false; }

  void remove_row(std::size_t row) {
    rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(row));
    rhs_.erase(rhs_.begin() + static_cast<std::ptrdiff_t>(row));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(row));
  }

  // Reduced costs and objective value for cost vector c under the current basis.
  void price(const RationalVector& c) {
    reduced_ = c;
    objective_ = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Rational& cb = c[basis_[i]];
      if (cb == 0) continue;
      objective_ += cb * rhs_[i];
      for (std::size_t j = 0; j < reduced_.size(); ++j)
        if (rows_[i][j] != 0) reduced_[j] -= cb * rows_[i][j];
    }
  }

  const RationalVector& reduced() const { return reduced_; }
  const Rational& objective() const { return objective_; }

  void pivot(std::size_t row, std::size_t column) {
    Rational inv = 1 / rows_[row][column];
    auto& pr = rows_[row];
    for (auto& v : pr)
      if (v != 0) v *= inv;
    rhs_[row] *= inv;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i == row || rows_[i][column] == 0) continue;
      Rational factor = rows_[i][column];
      for (std::size_t j = 0; j < pr.size(); ++j)
        if (pr[j] != 0) rows_[i][j] -= factor * pr[j];
      rhs_[i] -= factor * rhs_[row];
    }
    if (!reduced_.empty() && reduced_[column] != 0) {
      Rational factor = reduced_[column];
      for (std::size_t j = 0; j < pr.size(); ++j)
        if (pr[j] != 0) reduced_[j] -= factor * pr[j];
      objective_ += factor * rhs_[row];
    }
    basis_[row] = column;
  }

  // Bland's rule: lowest-index improving column, lowest-index basic variable among ratio ties.
  // Returns false when unbounded.
  bool optimize() {
    for (;;) {
      std::size_t entering = column_count();
      for (std::size_t j = 0; j < column_count(); ++j)
        if (allowed_[j] && reduced_[j] < 0) {
          entering = j;
          break;
        }
      if (entering == column_count()) return true;
      std::optional<std::size_t> leaving;
      Rational best;
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i][entering] <= 0) continue;
        Rational ratio = rhs_[i] / rows_[i][entering];
        if (!leaving || ratio < best || (ratio == best && basis_[i] < basis_[*leaving])) {
          leaving = i;
          best = ratio;
        }
      }
      if (!leaving) return false;
      pivot(*leaving, entering);
    }
  }

  // Restricts to the optimal face: nonbasic columns with positive reduced cost must stay at zero.
  void fix_to_optimal_face() {
    for (std::size_t j = 0; j < column_count(); ++j)
      if (reduced_[j] > 0) allowed_[j] = false;
  }

  RationalVector solution(std::size_t columns) const {
    RationalVector x(columns, Rational(0));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (basis_[i] < columns) x[basis_[i]] = rhs_[i];
    return x;
  }

 private:
  std::vector<RationalVector> rows_;
  RationalVector rhs_;
  std::vector<bool> allowed_;
  std::vector<std::size_t> basis_;
  RationalVector reduced_;
  Rational objective_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const std::vector<RationalVector>& tie_breaks) {
  const std::size_t m = lp.A.size();
  const std::size_t n = lp.c.size();
  if (lp.b.size() != m) throw UsageError("LP right-hand side has the wrong length");
  for (const auto& row : lp.A)
    if (row.size() != n) throw UsageError("LP constraint row has the wrong length");
  for (const auto& obj : tie_breaks)
    if (obj.size() != n) throw UsageError("LP tie-break objective has the wrong length");

  // Columns: n structural, then m artificial.
  std::vector<RationalVector> rows(m, RationalVector(n + m, Rational(0)));
  RationalVector rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool flip = lp.b[i] < 0;
    for (std::size_t j = 0; j < n; ++j) rows[i][j] = flip ? Rational(-lp.A[i][j]) : lp.A[i][j];
    rhs[i] = flip ? Rational(-lp.b[i]) : lp.b[i];
    rows[i][n + i] = 1;
  }
  Tableau tab(std::move(rows), std::move(rhs), n + m);
  for (std::size_t i = 0; i < m; ++i) tab.set_basis(i, n + i);

  RationalVector phase1(n + m, Rational(0));
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1;
  tab.price(phase1);
  tab.optimize();
  LpResult result;
  if (tab.objective() != 0) {
    result.status = LpResult::Status::kInfeasible;
    return result;
  }
  // Drive zero-valued artificials out of the basis; drop rows that are redundant.
  for (std::size_t i = tab.row_count(); i-- > 0;) {
    if (tab.basic(i) < n) continue;
    std::optional<std::size_t> column;
    for (std::size_t j = 0; j < n && !column; ++j)
      if (tab.at(i, j) != 0) column = j;
    if (column) tab.pivot(i, *column);
    else tab.remove_row(i);
  }
  for (std::size_t j = n; j < n + m; ++j) tab.forbid(j);

  RationalVector cost(n + m, Rational(0));
  std::copy(lp.c.begin(), lp.c.end(), cost.begin());
  tab.price(cost);
  if (!tab.optimize()) {
    result.status = LpResult::Status::kUnbounded;
    return result;
  }
  result.value = tab.objective();
  for (const auto& obj : tie_breaks) {
    tab.fix_to_optimal_face();
    RationalVector next(n + m, Rational(0));
    std::copy(obj.begin(), obj.end(), next.begin());
    tab.price(next);
    if (!tab.optimize()) throw UsageError("LP tie-break objective is unbounded on the optimal face");
  }
  result.status = LpResult::Status::kOptimal;
  result.x = tab.solution(n);
  return result;
}

std::vector<std::size_t> row_reduce(std::vector<RationalVector>& M) {
  std::vector<std::size_t> pivots;
  if (M.empty()) return pivots;
  const std::size_t cols = M[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < M.size(); ++c) {
    std::size_t p = r;
    while (p < M.size() && M[p][c] == 0) ++p;
    if (p == M.size()) continue;
    std::swap(M[p], M[r]);
    Rational inv = 1 / M[r][c];
    for (auto& v : M[r]) v *= inv;
    for (std::size_t i = 0; i < M.size(); ++i) {
      if (i == r || M[i][c] == 0) continue;
      Rational factor = M[i][c];
      for (std::size_t j = 0; j < cols; ++j) M[i][j] -= factor * M[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  M.resize(r);
  return pivots;
}

std::size_t rank(std::vector<RationalVector> M) { return row_reduce(M).size(); }

std::vector<RationalVector> null_space(std::vector<RationalVector> M, std::size_t columns) {
  for (const auto& row : M)
    if (row.size() != columns) throw UsageError("matrix row has the wrong length");
  auto pivots = row_reduce(M);
  std::vector<bool> is_pivot(columns, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<RationalVector> basis;
  for (std::size_t free = 0; free < columns; ++free) {
    if (is_pivot[free]) continue;
    RationalVector z(columns, Rational(0));
    z[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) z[pivots[r]] = -M[r][free];
    basis.push_back(std::move(z));
  }
  return basis;
}

std::optional<RationalVector> solve_square(std::vector<RationalVector> M, RationalVector b) {
  const std::size_t n = M.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (M[i].size() != n) throw UsageError("solve_square needs a square matrix");
    M[i].push_back(b[i]);
  }
  auto pivots = row_reduce(M);
  if (pivots.size() < n || pivots.back() >= n) return std::nullopt;
  RationalVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = M[i][n];
  return x;
}

}  // namespace bfactory
