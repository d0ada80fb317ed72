#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace posekit::detail {

// Shortest-augmenting-path solver for the rectangular assignment problem
// (Jonker-Volgenant style, O(rows^2 * cols)). Requires rows <= cols and
// returns, for each row, the column assigned to it in a minimum-total-cost
// perfect matching of the rows.
inline std::vector<std::size_t> min_cost_assignment(
    std::size_t rows, std::size_t cols,
    const std::function<double(std::size_t, std::size_t)>& cost) {
  const double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual column that seeds each
  // augmenting search.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> match(cols + 1, 0);  // column -> row (0 = free)
  std::vector<std::size_t> way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(rows, 0);
  for (std::size_t j = 1; j <= cols; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace posekit::detail
