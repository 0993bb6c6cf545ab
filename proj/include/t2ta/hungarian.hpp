#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

namespace t2ta {

/// Minimum-cost rectangular assignment (Jonker-Volgenant style shortest
/// augmenting paths with dual potentials, O(n^2 m)).
///
/// Returns one column index per row, or -1 for rows left unassigned when
/// rows > cols. Exactly min(rows, cols) rows are assigned. Costs must be
/// finite; use a large sentinel to discourage a pairing instead of infinity.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n_rows = static_cast<int>(cost.rows());
  const int n_cols = static_cast<int>(cost.cols());
  if (n_rows == 0 || n_cols == 0) return std::vector<int>(static_cast<std::size_t>(n_rows), -1);
  if (!cost.allFinite()) throw std::invalid_argument("assignment costs must be finite");

  if (n_rows > n_cols) {
    const std::vector<int> col_to_row = hungarian(cost.transpose());
    std::vector<int> row_to_col(static_cast<std::size_t>(n_rows), -1);
    for (int c = 0; c < n_cols; ++c)
      if (col_to_row[static_cast<std::size_t>(c)] >= 0)
        row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(c)])] = c;
    return row_to_col;
  }

  // 1-based arrays; p[j] is the row matched to column j, p[0] the row being
  // inserted on this iteration.
  const int n = n_rows, m = n_cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return row_to_col;
}

/// Total cost of an assignment returned by hungarian().
inline double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r)
    if (row_to_col[r] >= 0) total += cost(static_cast<int>(r), row_to_col[r]);
  return total;
}

}  // namespace t2ta
