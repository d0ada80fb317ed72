#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posekit/errors.hpp"

namespace posekit {

// One keypoint: sub-pixel coordinates plus a COCO-style visibility flag
// (0 = not labeled, 1 = labeled but occluded, 2 = labeled and visible).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int v = 0;

  bool operator==(const Keypoint&) const = default;
};

struct Pose {
  std::vector<Keypoint> keypoints;

  std::size_t size() const { return keypoints.size(); }

  std::size_t visible_count() const {
    std::size_t n = 0;
    for (const auto& kp : keypoints)
      if (kp.v > 0) ++n;
    return n;
  }

  bool operator==(const Pose&) const = default;
};

inline void validate_pose(const Pose& pose) {
  for (std::size_t i = 0; i < pose.keypoints.size(); ++i) {
    const auto& kp = pose.keypoints[i];
    if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
      throw InvalidArgument("keypoint " + std::to_string(i) +
                            " has non-finite coordinates");
    if (kp.v < 0 || kp.v > 2)
      throw InvalidArgument("keypoint " + std::to_string(i) +
                            " has visibility outside {0,1,2}");
  }
}

// An annotated instance. `scale` is sqrt(area) and is stored rather than
// recomputed from the box, so instances without boxes stay usable.
struct GroundTruthInstance {
  std::int64_t id = 0;
  Pose pose;
  double area = 0.0;
  double scale = 0.0;
  std::optional<std::array<double, 4>> bbox;  // x, y, w, h

  bool operator==(const GroundTruthInstance&) const = default;
};

inline GroundTruthInstance make_instance(
    std::int64_t id, Pose pose, double area,
    std::optional<std::array<double, 4>> bbox = std::nullopt) {
  if (!(area > 0.0) || !std::isfinite(area))
    throw InvalidArgument("instance " + std::to_string(id) +
                          ": area must be positive, got " +
                          std::to_string(area));
  validate_pose(pose);
  GroundTruthInstance gt;
  gt.id = id;
  gt.pose = std::move(pose);
  gt.area = area;
  gt.scale = std::sqrt(area);
  gt.bbox = bbox;
  return gt;
}

// Per-keypoint falloff constants k_i of the OKS kernel
// exp(-d^2 / (2 s^2 k_i^2)). Larger k means a more forgiving keypoint.
struct SigmaTable {
  std::vector<double> k;

  std::size_t size() const { return k.size(); }

  // The COCO kernel constants. The official evaluation uses k_i = 2*sigma_i
  // where sigma_i are the published per-keypoint sigmas
  // (https://cocodataset.org/#keypoints-eval); both lists are kept here so
  // the provenance is auditable.
  static SigmaTable coco17() {
    static const double sigmas[17] = {
        0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
        0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
    SigmaTable t;
    t.k.reserve(17);
    for (double s : sigmas) t.k.push_back(2.0 * s);
    return t;
  }

  // CrowdPose kernel constants, same 2*sigma convention as the CrowdPose
  // evaluation toolkit. Order: shoulders, elbows, wrists, hips, knees,
  // ankles (left/right pairs), head top, neck.
  static SigmaTable crowdpose14() {
    static const double sigmas[14] = {0.079, 0.079, 0.072, 0.072, 0.062,
                                      0.062, 0.107, 0.107, 0.087, 0.087,
                                      0.089, 0.089, 0.079, 0.079};
    SigmaTable t;
    t.k.reserve(14);
    for (double s : sigmas) t.k.push_back(2.0 * s);
    return t;
  }

  // Fallback when no dataset statistics exist: k_i = 1/K for every
  // keypoint.
  static SigmaTable uniform(std::size_t num_keypoints) {
    if (num_keypoints == 0)
      throw InvalidArgument("uniform sigma table needs at least 1 keypoint");
    SigmaTable t;
    t.k.assign(num_keypoints, 1.0 / static_cast<double>(num_keypoints));
    return t;
  }

  void validate() const {
    if (k.empty()) throw InvalidArgument("sigma table is empty");
    for (std::size_t i = 0; i < k.size(); ++i)
      if (!(k[i] > 0.0) || !std::isfinite(k[i]))
        throw InvalidArgument("sigma table entry " + std::to_string(i) +
                              " must be positive and finite");
  }

  bool operator==(const SigmaTable&) const = default;
};

// Resolves a named preset: "coco17", "crowdpose14", "uniform" (K taken from
// context) or "uniform(K)". Returns nullopt for unknown names so callers can
// fall back to their own lookup (e.g. preset files).
inline std::optional<SigmaTable> sigma_preset(const std::string& name,
                                              std::size_t context_k = 0) {
  if (name == "coco17") return SigmaTable::coco17();
  if (name == "crowdpose14") return SigmaTable::crowdpose14();
  if (name == "uniform") {
    if (context_k == 0)
      throw InvalidArgument(
          "sigma preset 'uniform' needs the keypoint count from context");
    return SigmaTable::uniform(context_k);
  }
  if (name.rfind("uniform(", 0) == 0 && name.back() == ')') {
    const std::string inner = name.substr(8, name.size() - 9);
    std::size_t pos = 0;
    unsigned long k = 0;
    try {
      k = std::stoul(inner, &pos);
    } catch (const std::exception&) {
      throw InvalidArgument("bad keypoint count in sigma preset '" + name +
                            "'");
    }
    if (pos != inner.size() || k == 0)
      throw InvalidArgument("bad keypoint count in sigma preset '" + name +
                            "'");
    return SigmaTable::uniform(k);
  }
  return std::nullopt;
}

// Object Keypoint Similarity between a predicted pose and a ground-truth
// instance:
//
//   OKS = sum_i exp(-d_i^2 / (2 s^2 k_i^2)) [v_i > 0] / sum_i [v_i > 0]
//
// where d_i is the Euclidean distance between the keypoints, s is the
// instance scale and v_i is the ground-truth visibility. Only ground-truth
// visibility gates a keypoint; predicted visibility plays no role.
inline double oks(const Pose& pred, const GroundTruthInstance& gt,
                  const SigmaTable& sigmas) {
  const std::size_t n = gt.pose.size();
  if (pred.size() != n || sigmas.size() != n)
    throw DimensionMismatch(
        "oks: pred/gt/sigma sizes differ (" + std::to_string(pred.size()) +
        ", " + std::to_string(n) + ", " + std::to_string(sigmas.size()) + ")");
  const double s2 = gt.scale * gt.scale;
  double sum = 0.0;
  std::size_t visible = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.pose.keypoints[i].v <= 0) continue;
    const double dx = pred.keypoints[i].x - gt.pose.keypoints[i].x;
    const double dy = pred.keypoints[i].y - gt.pose.keypoints[i].y;
    const double k = sigmas.k[i];
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * s2 * k * k));
    ++visible;
  }
  if (visible == 0)
    throw NoVisibleKeypoints("oks: ground truth has no visible keypoints");
  return sum / static_cast<double>(visible);
}

// Normalized per-keypoint errors u_i = d_i / (s * k_i), computed for every
// index including invisible ones; callers apply their own masks.
inline std::vector<double> normalized_errors(const Pose& pred,
                                             const GroundTruthInstance& gt,
                                             const SigmaTable& sigmas) {
  const std::size_t n = gt.pose.size();
  if (pred.size() != n || sigmas.size() != n)
    throw DimensionMismatch("normalized_errors: pred/gt/sigma sizes differ");
  if (!(gt.scale > 0.0))
    throw DegenerateScale("normalized_errors: instance scale must be > 0");
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pred.keypoints[i].x - gt.pose.keypoints[i].x;
    const double dy = pred.keypoints[i].y - gt.pose.keypoints[i].y;
    u[i] = std::sqrt(dx * dx + dy * dy) / (gt.scale * sigmas.k[i]);
  }
  return u;
}

// Axis-aligned bounding box of all keypoints, as (x, y, w, h). Degenerate
// (zero-extent) boxes are possible for single-point poses.
inline std::array<double, 4> tight_bbox(const Pose& pose) {
  if (pose.keypoints.empty())
    throw InvalidArgument("tight_bbox: pose has no keypoints");
  double x0 = pose.keypoints[0].x, x1 = x0;
  double y0 = pose.keypoints[0].y, y1 = y0;
  for (const auto& kp : pose.keypoints) {
    x0 = std::min(x0, kp.x);
    x1 = std::max(x1, kp.x);
    y0 = std::min(y0, kp.y);
    y1 = std::max(y1, kp.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace posekit
