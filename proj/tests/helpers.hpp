#pragma once

// Test-side oracles and generators. Everything here recomputes expected
// values through deliberately plain code paths, independent of the library
// implementations under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "posekit/posekit.hpp"

namespace testkit {

using posekit::detail::Rng;

// ---------------------------------------------------------------------------
// Brute-force optimal matching: enumerate injective partial maps.

inline void brute_force_rec(const posekit::OksMatrix& m, std::size_t row,
                            std::vector<int>& col_used, double acc,
                            double& best) {
  if (row == m.rows) {
    best = std::max(best, acc);
    return;
  }
  // Leaving a row unmatched is always allowed; with non-negative entries
  // the maximum is attained by some min(N,M)-sized matching anyway.
  brute_force_rec(m, row + 1, col_used, acc, best);
  for (std::size_t j = 0; j < m.cols; ++j) {
    if (col_used[j]) continue;
    col_used[j] = 1;
    brute_force_rec(m, row + 1, col_used, acc + m.at(row, j), best);
    col_used[j] = 0;
  }
}

inline double brute_force_best_total(const posekit::OksMatrix& m) {
  std::vector<int> used(m.cols, 0);
  double best = 0.0;
  brute_force_rec(m, 0, used, 0.0, best);
  return best;
}

inline posekit::OksMatrix random_oks_matrix(Rng& rng, std::size_t n,
                                            std::size_t mcols) {
  std::vector<double> vals(n * mcols);
  for (auto& v : vals) v = rng.uniform();
  return posekit::OksMatrix(n, mcols, std::move(vals));
}

// ---------------------------------------------------------------------------
// Random pose machinery.

inline posekit::Pose random_pose(Rng& rng, std::size_t k, double span = 200.0,
                                 double invisible_prob = 0.0) {
  posekit::Pose pose;
  pose.keypoints.resize(k);
  bool any_visible = false;
  for (std::size_t i = 0; i < k; ++i) {
    pose.keypoints[i].x = rng.uniform(0.0, span);
    pose.keypoints[i].y = rng.uniform(0.0, span);
    pose.keypoints[i].v = rng.uniform() < invisible_prob ? 0 : 2;
    if (i + 1 == k && !any_visible) pose.keypoints[i].v = 2;
    if (pose.keypoints[i].v > 0) any_visible = true;
  }
  return pose;
}

inline posekit::Pose jitter_pose(Rng& rng, const posekit::Pose& base,
                                 double sigma) {
  posekit::Pose out = base;
  for (auto& kp : out.keypoints) {
    kp.x += sigma * rng.normal();
    kp.y += sigma * rng.normal();
    kp.v = 2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Independent COCO-protocol evaluation oracle. Matching, accumulation and
// interpolation are re-derived with plain loops; only the OKS kernel is
// shared with the library.

struct OracleDet {
  double score = 0.0;
  std::int64_t image_id = 0;
  std::size_t index = 0;  // position within the image's capped list
  bool tp = false;
  bool ignored = false;
};

inline std::optional<double> oracle_ap(
    const std::vector<posekit::Detection>& dets,
    const std::vector<posekit::ImageAnnotations>& images,
    const posekit::SigmaTable& sigmas, double thr,
    const posekit::AreaRange& range, std::size_t max_dets,
    double* max_recall_out = nullptr) {
  std::size_t num_gts = 0;
  for (const auto& img : images)
    for (const auto& gt : img.gts)
      if (gt.pose.visible_count() > 0 && gt.area >= range.lo &&
          gt.area < range.hi)
        ++num_gts;
  if (num_gts == 0) return std::nullopt;

  std::vector<OracleDet> outcomes;
  for (const auto& img : images) {
    std::vector<const posekit::Detection*> pool;
    for (const auto& d : dets)
      if (d.image_id == img.image_id) pool.push_back(&d);
    std::stable_sort(pool.begin(), pool.end(),
                     [](const posekit::Detection* a,
                        const posekit::Detection* b) {
                       return a->score > b->score;
                     });
    if (pool.size() > max_dets) pool.resize(max_dets);

    std::vector<int> gt_ignored(img.gts.size(), 0);
    for (std::size_t g = 0; g < img.gts.size(); ++g) {
      const auto& gt = img.gts[g];
      gt_ignored[g] = (gt.pose.visible_count() == 0 || gt.area < range.lo ||
                       gt.area >= range.hi)
                          ? 1
                          : 0;
    }
    std::vector<int> taken(img.gts.size(), 0);
    for (std::size_t d = 0; d < pool.size(); ++d) {
      // Pass 1: best unignored ground truth at or above the threshold
      // (ties resolved toward the later index, matching the greedy rule).
      int best_g = -1;
      double best = thr;
      for (std::size_t g = 0; g < img.gts.size(); ++g) {
        if (taken[g] || gt_ignored[g] ||
            img.gts[g].pose.visible_count() == 0)
          continue;
        const double v = posekit::oks(pool[d]->pose, img.gts[g], sigmas);
        if (v >= best) {
          best = v;
          best_g = static_cast<int>(g);
        }
      }
      bool matched_ignored = false;
      if (best_g < 0) {
        // Pass 2: fall back to an ignored (but visible) ground truth.
        best = thr;
        for (std::size_t g = 0; g < img.gts.size(); ++g) {
          if (taken[g] || !gt_ignored[g] ||
              img.gts[g].pose.visible_count() == 0)
            continue;
          const double v = posekit::oks(pool[d]->pose, img.gts[g], sigmas);
          if (v >= best) {
            best = v;
            best_g = static_cast<int>(g);
            matched_ignored = true;
          }
        }
      }
      OracleDet out;
      out.score = pool[d]->score;
      out.image_id = img.image_id;
      out.index = d;
      if (best_g >= 0) {
        taken[best_g] = 1;
        out.tp = !matched_ignored;
        out.ignored = matched_ignored;
      } else {
        const auto box = posekit::tight_bbox(pool[d]->pose);
        const double area = box[2] * box[3];
        out.ignored = area < range.lo || area >= range.hi;
      }
      outcomes.push_back(out);
    }
  }

  std::sort(outcomes.begin(), outcomes.end(),
            [](const OracleDet& a, const OracleDet& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.index < b.index;
            });
  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (const auto& o : outcomes) {
    if (o.ignored) continue;
    (o.tp ? tp : fp) += 1.0;
    recall.push_back(tp / static_cast<double>(num_gts));
    precision.push_back(tp / (tp + fp));
  }
  if (max_recall_out)
    *max_recall_out = recall.empty() ? 0.0 : recall.back();
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = static_cast<double>(r) / 100.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i)
      if (recall[i] >= level) p = std::max(p, precision[i]);
    sum += p;
  }
  return sum / 101.0;
}

// Random micro-scene for evaluation oracle comparisons: up to `max_gts`
// ground truths with areas straddling the medium/large boundary, plus
// detections that are noisy copies or pure clutter.
struct MicroScene {
  posekit::ImageAnnotations image;
  std::vector<posekit::Detection> dets;
};

inline MicroScene random_micro_scene(Rng& rng, std::int64_t image_id,
                                     std::size_t k, std::size_t max_gts,
                                     std::size_t max_dets) {
  MicroScene scene;
  scene.image.image_id = image_id;
  const std::size_t num_gts = rng.below(max_gts + 1);
  for (std::size_t g = 0; g < num_gts; ++g) {
    posekit::Pose pose = random_pose(rng, k, 200.0, 0.15);
    if (rng.uniform() < 0.1)
      for (auto& kp : pose.keypoints) kp.v = 0;  // fully unlabeled instance
    const double side = rng.uniform(20.0, 150.0);
    scene.image.gts.push_back(posekit::make_instance(
        image_id * 100 + static_cast<std::int64_t>(g), pose, side * side));
  }
  const std::size_t num_dets = rng.below(max_dets + 1);
  for (std::size_t d = 0; d < num_dets; ++d) {
    posekit::Pose pose;
    if (!scene.image.gts.empty() && rng.uniform() < 0.7) {
      const auto& gt = scene.image.gts[rng.below(scene.image.gts.size())];
      pose = jitter_pose(rng, gt.pose, 0.15 * gt.scale);
    } else {
      pose = random_pose(rng, k);
    }
    double score = rng.uniform();
    if (rng.uniform() < 0.3) score = std::round(score * 2.0) / 2.0;
    scene.dets.push_back({image_id, std::move(pose), score, std::nullopt});
  }
  return scene;
}

}  // namespace testkit
