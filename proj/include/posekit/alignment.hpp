#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posekit/detail/hungarian.hpp"
#include "posekit/errors.hpp"

namespace posekit {

// Row-major similarity matrix: rows are ground truths, columns are
// predictions, entries are OKS values in [0,1].
struct OksMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  OksMatrix() = default;
  OksMatrix(std::size_t n, std::size_t m, std::vector<double> vals)
      : rows(n), cols(m), values(std::move(vals)) {
    if (rows == 0 || cols == 0)
      throw InvalidArgument("OksMatrix: needs at least one row and column");
    if (values.size() != rows * cols)
      throw InvalidArgument("OksMatrix: value count does not match shape");
    for (double x : values)
      if (!(x >= 0.0 && x <= 1.0))
        throw InvalidArgument("OksMatrix: entries must lie in [0,1]");
  }

  double at(std::size_t i, std::size_t j) const {
    return values[i * cols + j];
  }
};

// A (possibly partial) injective GT -> prediction mapping with its per-GT
// OKS values. Unmatched ground truths carry nullopt and contribute 0.
struct MatchResult {
  std::vector<std::optional<std::size_t>> mapping;
  std::vector<double> per_gt_oks;
  double total_oks = 0.0;
};

// Globally optimal injective matching maximizing total OKS. Matches
// min(rows, cols) pairs; when there are more ground truths than
// predictions the leftover rows stay unmatched with OKS 0.
inline MatchResult optimal_match(const OksMatrix& m) {
  MatchResult result;
  result.mapping.assign(m.rows, std::nullopt);
  result.per_gt_oks.assign(m.rows, 0.0);
  if (m.rows <= m.cols) {
    const auto row_to_col = detail::min_cost_assignment(
        m.rows, m.cols,
        [&](std::size_t i, std::size_t j) { return -m.at(i, j); });
    for (std::size_t i = 0; i < m.rows; ++i) result.mapping[i] = row_to_col[i];
  } else {
    // Transpose: assign every prediction to a distinct ground truth.
    const auto col_to_row = detail::min_cost_assignment(
        m.cols, m.rows,
        [&](std::size_t j, std::size_t i) { return -m.at(i, j); });
    for (std::size_t j = 0; j < m.cols; ++j)
      result.mapping[col_to_row[j]] = j;
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (result.mapping[i]) result.per_gt_oks[i] = m.at(i, *result.mapping[i]);
    result.total_oks += result.per_gt_oks[i];
  }
  return result;
}

// Task alignment error of a selection against the OKS-optimal matching:
//
//   TAE = (1/N) * sum_i (OKS(g_i, optimal_i) - OKS(g_i, selected_i))
//
// Unselected ground truths count as OKS 0. Zero means the selection
// achieves the optimal total; the mean is never below -1e-12 because the
// optimum ranges over all injective selections.
inline double tae(const OksMatrix& m,
                  const std::vector<std::optional<std::size_t>>& selected) {
  if (selected.size() != m.rows)
    throw DimensionMismatch("tae: selection size must equal ground-truth count");
  std::vector<char> taken(m.cols, 0);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!selected[i]) continue;
    const std::size_t j = *selected[i];
    if (j >= m.cols)
      throw InvalidArgument("tae: selected index " + std::to_string(j) +
                            " out of bounds");
    if (taken[j])
      throw NonInjectiveSelection(
          "tae: prediction " + std::to_string(j) +
          " selected by more than one ground truth");
    taken[j] = 1;
  }
  const MatchResult best = optimal_match(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double sel = selected[i] ? m.at(i, *selected[i]) : 0.0;
    sum += best.per_gt_oks[i] - sel;
  }
  return sum / static_cast<double>(m.rows);
}

namespace detail {

// Average ranks (1-based) with ties sharing the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           values[order[j + 1]] == values[order[i]])
      ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DimensionMismatch("spearman: sequences differ in length");
  if (x.size() < 2)
    throw DimensionMismatch("spearman: needs at least two samples");
  const auto constant = [](std::span<const double> v) {
    for (double a : v)
      if (a != v[0]) return false;
    return true;
  };
  if (constant(x) || constant(y))
    throw DegenerateInput("spearman: constant sequence has no rank ordering");
  const std::vector<double> rx = detail::average_ranks(x);
  const std::vector<double> ry = detail::average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace posekit
