#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "posekit/errors.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// A decoded prediction ready for suppression. `scale` is the instance
// scale used when this pose acts as the reference of a pairwise OKS.
struct ScoredPose {
  Pose pose;
  double conf = 0.0;
  double scale = 0.0;
};

// Scale convention for prediction-vs-prediction OKS, where no ground-truth
// scale exists. Default: the kept (higher-confidence) candidate's scale.
enum class PairwiseScale { kept, candidate, geometric_mean };

// OKS between two predictions with every keypoint treated as visible.
inline double pairwise_oks(const Pose& a, const Pose& b, double scale,
                           const SigmaTable& sigmas) {
  const std::size_t n = a.size();
  if (b.size() != n || sigmas.size() != n)
    throw DimensionMismatch("pairwise_oks: pose/sigma sizes differ");
  if (n == 0) throw InvalidArgument("pairwise_oks: empty poses");
  const double s2 = scale * scale;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = a.keypoints[i].x - b.keypoints[i].x;
    const double dy = a.keypoints[i].y - b.keypoints[i].y;
    const double k = sigmas.k[i];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * s2 * k * k));
  }
  return sum / static_cast<double>(n);
}

// Greedy OKS-based NMS: walk candidates by descending confidence (ties by
// index), keep the head, suppress any later candidate whose OKS with a kept
// one exceeds thr. Returns kept indices in keep order.
inline std::vector<std::size_t> oks_nms(
    const std::vector<ScoredPose>& cands, const SigmaTable& sigmas,
    double thr, PairwiseScale convention = PairwiseScale::kept) {
  if (!(thr > 0.0 && thr < 1.0))
    throw InvalidArgument("oks_nms: threshold must lie in (0,1)");
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (cands[a].conf != cands[b].conf)
                       return cands[a].conf > cands[b].conf;
                     return a < b;
                   });
  std::vector<std::size_t> kept;
  for (const std::size_t idx : order) {
    bool suppressed = false;
    for (const std::size_t k : kept) {
      double s = cands[k].scale;
      if (convention == PairwiseScale::candidate) s = cands[idx].scale;
      if (convention == PairwiseScale::geometric_mean)
        s = std::sqrt(cands[k].scale * cands[idx].scale);
      if (pairwise_oks(cands[k].pose, cands[idx].pose, s, sigmas) > thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

// NMS-free selection: keep everything at or above the confidence
// threshold, input order preserved.
inline std::vector<std::size_t> conf_select(const std::vector<ScoredPose>& cands,
                                            double conf_thr) {
  if (!(conf_thr >= 0.0 && conf_thr <= 1.0))
    throw InvalidArgument("conf_select: threshold must lie in [0,1]");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].conf >= conf_thr) kept.push_back(i);
  return kept;
}

}  // namespace posekit
