#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "posekit/detail/hungarian.hpp"
#include "posekit/errors.hpp"
#include "posekit/pose.hpp"

namespace posekit {

enum class PyramidLevel { P3, P4, P5 };

inline int stride_of(PyramidLevel level) {
  switch (level) {
    case PyramidLevel::P3: return 8;
    case PyramidLevel::P4: return 16;
    case PyramidLevel::P5: return 32;
  }
  return 0;
}

inline const char* to_string(PyramidLevel level) {
  switch (level) {
    case PyramidLevel::P3: return "P3";
    case PyramidLevel::P4: return "P4";
    case PyramidLevel::P5: return "P5";
  }
  return "?";
}

inline std::optional<PyramidLevel> level_from_string(const std::string& s) {
  if (s == "P3") return PyramidLevel::P3;
  if (s == "P4") return PyramidLevel::P4;
  if (s == "P5") return PyramidLevel::P5;
  return std::nullopt;
}

// One cell of the dense multi-scale prediction grid, already decoded into
// image coordinates.
struct GridCandidate {
  PyramidLevel level = PyramidLevel::P3;
  int stride = 8;
  int row = 0;
  int col = 0;
  double conf = 0.0;
  Pose pose;
  std::vector<double> vis_probs;

  // Image-space center of the cell.
  double center_x() const { return (col + 0.5) * stride; }
  double center_y() const { return (row + 0.5) * stride; }

  bool operator==(const GridCandidate&) const = default;
};

inline GridCandidate make_candidate(PyramidLevel level, int row, int col,
                                    double conf, Pose pose,
                                    std::vector<double> vis_probs) {
  if (row < 0 || col < 0)
    throw InvalidArgument("candidate cell indices must be non-negative");
  if (!(conf >= 0.0 && conf <= 1.0))
    throw InvalidArgument("candidate confidence must lie in [0,1]");
  if (vis_probs.size() != pose.size())
    throw DimensionMismatch("candidate vis_probs length must equal K");
  for (double p : vis_probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw InvalidArgument("candidate vis_prob must lie in [0,1]");
  validate_pose(pose);
  GridCandidate c;
  c.level = level;
  c.stride = stride_of(level);
  c.row = row;
  c.col = col;
  c.conf = conf;
  c.pose = std::move(pose);
  c.vis_probs = std::move(vis_probs);
  return c;
}

struct AssignParams {
  double alpha = 0.5;
  double beta = 6.0;
  std::size_t k_top = 10;
};

inline void validate_params(const AssignParams& p) {
  if (!(p.alpha >= 0.0) || !(p.beta >= 0.0))
    throw InvalidArgument("assignment exponents must be >= 0");
  if (p.alpha == 0.0 && p.beta == 0.0)
    throw InvalidArgument("alpha and beta must not both be zero");
  if (p.k_top < 1) throw InvalidArgument("k_top must be >= 1");
}

// Keypoint-driven assignment metric: conf^alpha * oks^beta, with x^0 := 1
// for x >= 0 and 0^p := 0 for p > 0 so that either factor can be switched
// off cleanly.
inline double score(double conf, double oks_val, const AssignParams& params) {
  const auto pw = [](double x, double p) {
    return p == 0.0 ? 1.0 : std::pow(x, p);
  };
  return pw(conf, params.alpha) * pw(oks_val, params.beta);
}

struct GtPositive {
  std::size_t candidate = 0;
  double score = 0.0;

  bool operator==(const GtPositive&) const = default;
};

struct OwnedPositive {
  std::size_t candidate = 0;
  std::size_t owner_gt = 0;
  double score = 0.0;

  bool operator==(const OwnedPositive&) const = default;
};

// per_gt holds each ground truth's Top-K (or single) picks sorted by score
// descending; positives is the deduplicated global set where every
// candidate has exactly one owner.
struct AssignmentResult {
  std::vector<std::vector<GtPositive>> per_gt;
  std::vector<OwnedPositive> positives;

  std::vector<OwnedPositive> positives_of(std::size_t gt_index) const {
    std::vector<OwnedPositive> out;
    for (const auto& p : positives)
      if (p.owner_gt == gt_index) out.push_back(p);
    return out;
  }
};

namespace detail {

inline std::vector<double> score_row(const GroundTruthInstance& gt,
                                     const std::vector<GridCandidate>& cands,
                                     const SigmaTable& sigmas,
                                     const AssignParams& params) {
  std::vector<double> row(cands.size());
  for (std::size_t c = 0; c < cands.size(); ++c)
    row[c] = score(cands[c].conf, oks(cands[c].pose, gt, sigmas), params);
  return row;
}

// Deduplicates candidates claimed by several ground truths: the higher
// score owns; ties go to the lower GT index; losers do not backfill.
inline std::vector<OwnedPositive> resolve_owners(
    const std::vector<std::vector<GtPositive>>& per_gt) {
  std::vector<OwnedPositive> flat;
  for (std::size_t g = 0; g < per_gt.size(); ++g)
    for (const auto& p : per_gt[g]) flat.push_back({p.candidate, g, p.score});
  std::vector<OwnedPositive> out;
  for (const auto& cur : flat) {
    bool superseded = false;
    for (auto& kept : out) {
      if (kept.candidate != cur.candidate) continue;
      if (cur.score > kept.score) kept = cur;
      superseded = true;
      break;
    }
    if (!superseded) out.push_back(cur);
  }
  std::sort(out.begin(), out.end(),
            [](const OwnedPositive& a, const OwnedPositive& b) {
              return a.candidate < b.candidate;
            });
  return out;
}

}  // namespace detail

// Multi-assignment: every ground truth scores all candidates and keeps its
// k_top best (ties broken toward the lower candidate index). Candidates
// topping several ground truths are owned by the one with the higher score.
inline AssignmentResult assign_mah(const std::vector<GroundTruthInstance>& gts,
                                   const std::vector<GridCandidate>& cands,
                                   const SigmaTable& sigmas,
                                   const AssignParams& params) {
  validate_params(params);
  if (cands.empty()) throw NoCandidates("assign_mah: no candidates");
  AssignmentResult result;
  result.per_gt.resize(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const std::vector<double> row =
        detail::score_row(gts[g], cands, sigmas, params);
    std::vector<std::size_t> order(cands.size());
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    const std::size_t take = std::min(params.k_top, cands.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (row[a] != row[b]) return row[a] > row[b];
                        return a < b;
                      });
    result.per_gt[g].reserve(take);
    for (std::size_t r = 0; r < take; ++r)
      result.per_gt[g].push_back({order[r], row[order[r]]});
  }
  result.positives = detail::resolve_owners(result.per_gt);
  return result;
}

// Single-assignment: an injective GT -> candidate mapping. By default the
// mapping maximizes the total score (rectangular optimal matching);
// independent_argmax instead takes each ground truth's argmax, the ablation
// variant that may collide across ground truths.
inline AssignmentResult assign_sah(const std::vector<GroundTruthInstance>& gts,
                                   const std::vector<GridCandidate>& cands,
                                   const SigmaTable& sigmas,
                                   const AssignParams& params,
                                   bool independent_argmax = false) {
  validate_params(params);
  if (cands.size() < gts.size())
    throw InsufficientCandidates(
        "assign_sah: fewer candidates (" + std::to_string(cands.size()) +
        ") than ground truths (" + std::to_string(gts.size()) + ")");
  AssignmentResult result;
  result.per_gt.resize(gts.size());
  if (gts.empty()) return result;

  std::vector<std::vector<double>> rows(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g)
    rows[g] = detail::score_row(gts[g], cands, sigmas, params);

  if (independent_argmax) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < cands.size(); ++c)
        if (rows[g][c] > rows[g][best]) best = c;
      result.per_gt[g].push_back({best, rows[g][best]});
    }
  } else {
    const auto gt_to_cand = detail::min_cost_assignment(
        gts.size(), cands.size(),
        [&](std::size_t g, std::size_t c) { return -rows[g][c]; });
    for (std::size_t g = 0; g < gts.size(); ++g)
      result.per_gt[g].push_back({gt_to_cand[g], rows[g][gt_to_cand[g]]});
  }
  result.positives = detail::resolve_owners(result.per_gt);
  return result;
}

}  // namespace posekit
