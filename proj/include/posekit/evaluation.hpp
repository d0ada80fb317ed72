#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posekit/detail/parallel.hpp"
#include "posekit/errors.hpp"
#include "posekit/pose.hpp"

namespace posekit {

struct Detection {
  std::int64_t image_id = 0;
  Pose pose;
  double score = 0.0;
  std::optional<std::int64_t> matched_gt;  // diagnostic slot, not used by eval
};

struct ImageAnnotations {
  std::int64_t image_id = 0;
  std::vector<GroundTruthInstance> gts;
};

struct AreaRange {
  std::string name;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

// COCO keypoint-protocol constants: 10 OKS thresholds 0.50:0.05:0.95,
// 101 recall points, area partitions all / medium [32^2, 96^2) /
// large [96^2, inf), and up to 20 detections per image.
inline std::vector<double> default_oks_thresholds() {
  std::vector<double> t(10);
  for (int i = 0; i < 10; ++i) t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  return t;
}

inline std::vector<AreaRange> default_area_ranges() {
  return {{"all", 0.0, std::numeric_limits<double>::infinity()},
          {"medium", 32.0 * 32.0, 96.0 * 96.0},
          {"large", 96.0 * 96.0, std::numeric_limits<double>::infinity()}};
}

struct EvalParams {
  std::vector<double> thresholds = default_oks_thresholds();
  std::vector<AreaRange> area_ranges = default_area_ranges();
  std::size_t max_dets = 20;
  unsigned jobs = 1;
};

struct PrCurve {
  double threshold = 0.0;
  std::string area;
  std::vector<double> precision;  // at the 101 recall points 0.00 .. 1.00
  double max_recall = 0.0;
  std::size_t num_gts = 0;
};

// Metrics are nullopt when undefined (no usable ground truths in range).
struct EvalSummary {
  std::optional<double> ap, ap50, ap75, ap_medium, ap_large, ar;
  std::vector<PrCurve> curves;
};

struct MatchFlags {
  std::vector<bool> tp;
  std::vector<int> matched_gt;  // index into gts, -1 if unmatched
};

// Greedy per-image matching: detections in descending-score order claim the
// unmatched ground truth with the highest OKS, provided that OKS clears the
// threshold (inclusive). Ground truths with no visible keypoint never match.
inline MatchFlags match_image(const std::vector<Detection>& dets_sorted,
                              const std::vector<GroundTruthInstance>& gts,
                              const SigmaTable& sigmas, double oks_thr) {
  MatchFlags flags;
  flags.tp.assign(dets_sorted.size(), false);
  flags.matched_gt.assign(dets_sorted.size(), -1);
  std::vector<char> gt_taken(gts.size(), 0);
  for (std::size_t d = 0; d < dets_sorted.size(); ++d) {
    double best = -1.0;
    int best_g = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g] || gts[g].pose.visible_count() == 0) continue;
      const double v = oks(dets_sorted[d].pose, gts[g], sigmas);
      if (v >= oks_thr && v > best) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      flags.tp[d] = true;
      flags.matched_gt[d] = best_g;
      gt_taken[best_g] = 1;
    }
  }
  return flags;
}

namespace detail {

struct ImageEvalInput {
  std::int64_t image_id = 0;
  std::vector<const Detection*> dets;  // top-max_dets by (score desc, index)
  const std::vector<GroundTruthInstance>* gts = nullptr;
  std::vector<std::vector<double>> oks_matrix;  // [det][gt]
  std::vector<double> det_area;                 // tight keypoint-bbox area
};

struct DetOutcome {
  double score = 0.0;
  std::int64_t image_id = 0;
  std::size_t det_index = 0;  // index within the image's capped list
  bool tp = false;
  bool ignored = false;
};

// Matching for one (image, threshold, area range) cell, mirroring the
// official protocol: prefer unignored ground truths, allow a fallback match
// to an ignored one, and ignore unmatched detections whose own area falls
// outside the range.
inline void match_ranged(const ImageEvalInput& in, double thr,
                         const AreaRange& range,
                         std::vector<DetOutcome>& sink) {
  const auto& gts = *in.gts;
  std::vector<char> gt_ignore(gts.size(), 0);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const bool usable = gts[g].pose.visible_count() > 0;
    const bool in_range = gts[g].area >= range.lo && gts[g].area < range.hi;
    gt_ignore[g] = (!usable || !in_range) ? 1 : 0;
  }
  // Unignored ground truths first, stable within each class.
  std::vector<std::size_t> gt_order(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) gt_order[g] = g;
  std::stable_sort(gt_order.begin(), gt_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return gt_ignore[a] < gt_ignore[b];
                   });
  std::vector<char> gt_taken(gts.size(), 0);
  for (std::size_t d = 0; d < in.dets.size(); ++d) {
    double best = thr;
    int best_g = -1;
    bool best_ignored = false;
    for (const std::size_t g : gt_order) {
      if (gt_taken[g]) continue;
      if (gts[g].pose.visible_count() == 0 && gt_ignore[g]) {
        // OKS is undefined without visible keypoints; such GTs never match.
        continue;
      }
      // Once a real match exists, do not trade it for an ignored one.
      if (best_g >= 0 && !best_ignored && gt_ignore[g]) break;
      const double v = in.oks_matrix[d][g];
      if (v < best) continue;
      best = v;
      best_g = static_cast<int>(g);
      best_ignored = gt_ignore[g] != 0;
    }
    DetOutcome out;
    out.score = in.dets[d]->score;
    out.image_id = in.image_id;
    out.det_index = d;
    if (best_g >= 0) {
      gt_taken[best_g] = 1;
      out.tp = !best_ignored;
      out.ignored = best_ignored;
    } else {
      const bool area_out =
          in.det_area[d] < range.lo || in.det_area[d] >= range.hi;
      out.tp = false;
      out.ignored = area_out;
    }
    sink.push_back(out);
  }
}

inline double interpolated_ap(std::vector<DetOutcome>& outcomes,
                              std::size_t num_gts,
                              std::vector<double>* precision_out,
                              double* max_recall_out) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const DetOutcome& a, const DetOutcome& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.det_index < b.det_index;
            });
  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (const auto& o : outcomes) {
    if (o.ignored) continue;
    if (o.tp)
      tp += 1.0;
    else
      fp += 1.0;
    recall.push_back(tp / static_cast<double>(num_gts));
    precision.push_back(tp / (tp + fp));
  }
  // Make precision non-increasing from the right, then sample the 101
  // recall points at the first curve point reaching each recall level.
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  std::vector<double> sampled(101, 0.0);
  for (int r = 0; r <= 100; ++r) {
    const double level = static_cast<double>(r) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end())
      sampled[r] = precision[static_cast<std::size_t>(it - recall.begin())];
  }
  double sum = 0.0;
  for (double p : sampled) sum += p;
  if (precision_out) *precision_out = std::move(sampled);
  if (max_recall_out) *max_recall_out = recall.empty() ? 0.0 : recall.back();
  return sum / 101.0;
}

}  // namespace detail

// COCO-protocol keypoint AP/AR over OKS thresholds: per-image greedy
// matching, 101-point interpolated precision, area-range partitions and a
// per-image detection cap. Detections for images absent from `images` are
// skipped.
inline EvalSummary evaluate(const std::vector<Detection>& dets,
                            const std::vector<ImageAnnotations>& images,
                            const SigmaTable& sigmas,
                            const EvalParams& params = {}) {
  // Group detections by image, keeping input order within each image.
  std::map<std::int64_t, std::vector<const Detection*>> by_image;
  for (const auto& img : images) by_image[img.image_id];
  for (const auto& det : dets) {
    const auto it = by_image.find(det.image_id);
    if (it != by_image.end()) it->second.push_back(&det);
  }

  std::vector<detail::ImageEvalInput> inputs(images.size());
  detail::parallel_for(images.size(), params.jobs, [&](std::size_t idx) {
    const auto& img = images[idx];
    detail::ImageEvalInput in;
    in.image_id = img.image_id;
    in.gts = &img.gts;
    const auto& pool = by_image.find(img.image_id)->second;
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pool[a]->score > pool[b]->score;
                     });
    if (order.size() > params.max_dets) order.resize(params.max_dets);
    for (const std::size_t i : order) in.dets.push_back(pool[i]);
    in.oks_matrix.resize(in.dets.size());
    in.det_area.resize(in.dets.size());
    for (std::size_t d = 0; d < in.dets.size(); ++d) {
      const auto box = tight_bbox(in.dets[d]->pose);
      in.det_area[d] = box[2] * box[3];
      in.oks_matrix[d].resize(img.gts.size(), 0.0);
      for (std::size_t g = 0; g < img.gts.size(); ++g) {
        if (img.gts[g].pose.visible_count() == 0) continue;
        in.oks_matrix[d][g] = oks(in.dets[d]->pose, img.gts[g], sigmas);
      }
    }
    inputs[idx] = std::move(in);
  });

  EvalSummary summary;
  std::map<std::string, std::vector<double>> ap_by_area;
  std::vector<double> recall_all;
  for (const auto& range : params.area_ranges) {
    std::size_t num_gts = 0;
    for (const auto& img : images)
      for (const auto& gt : img.gts)
        if (gt.pose.visible_count() > 0 && gt.area >= range.lo &&
            gt.area < range.hi)
          ++num_gts;
    for (const double thr : params.thresholds) {
      PrCurve curve;
      curve.threshold = thr;
      curve.area = range.name;
      curve.num_gts = num_gts;
      if (num_gts == 0) {
        summary.curves.push_back(std::move(curve));
        continue;
      }
      std::vector<detail::DetOutcome> outcomes;
      for (const auto& in : inputs)
        detail::match_ranged(in, thr, range, outcomes);
      const double ap = detail::interpolated_ap(outcomes, num_gts,
                                                &curve.precision,
                                                &curve.max_recall);
      ap_by_area[range.name].push_back(ap);
      if (range.name == "all") {
        recall_all.push_back(curve.max_recall);
        if (std::abs(thr - 0.50) < 1e-9) summary.ap50 = ap;
        if (std::abs(thr - 0.75) < 1e-9) summary.ap75 = ap;
      }
      summary.curves.push_back(std::move(curve));
    }
  }
  const auto mean_of = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  summary.ap = mean_of(ap_by_area["all"]);
  summary.ap_medium = mean_of(ap_by_area["medium"]);
  summary.ap_large = mean_of(ap_by_area["large"]);
  summary.ar = mean_of(recall_all);
  return summary;
}

}  // namespace posekit
