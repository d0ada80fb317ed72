#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "posekit/detail/parallel.hpp"
#include "posekit/detail/rng.hpp"
#include "posekit/errors.hpp"
#include "posekit/pose.hpp"

namespace posekit {

enum class LossKind { gaussian, laplace, soks };

inline const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::gaussian: return "gaussian";
    case LossKind::laplace: return "laplace";
    case LossKind::soks: return "soks";
  }
  return "?";
}

// Smooth-OKS similarity of a normalized error u: Gaussian exp(-u^2/2) while
// u^2 < 1, Laplace tail exp(-(2|u|-1)/2) once u^2 >= 1. The two branches
// agree in value and first derivative at |u| = 1, so the curve is C^1 and
// keeps a heavier-than-Gaussian tail for large errors.
inline double soks_scalar(double u) {
  if (!std::isfinite(u)) throw NonFinite("soks_scalar: non-finite input");
  const double u2 = u * u;
  if (u2 < 1.0) return std::exp(-0.5 * u2);
  return std::exp(-0.5 * (2.0 * std::abs(u) - 1.0));
}

// d/du of soks_scalar for u >= 0 (zero error maps to zero slope).
inline double soks_scalar_derivative(double u) {
  if (!std::isfinite(u)) throw NonFinite("soks_scalar_derivative: non-finite input");
  const double a = std::abs(u);
  const double sign = u < 0.0 ? -1.0 : 1.0;
  if (a * a < 1.0) return -sign * a * std::exp(-0.5 * a * a);
  return -sign * std::exp(-0.5 * (2.0 * a - 1.0));
}

namespace detail {

// Per-keypoint similarity in normalized-error space for each loss kind.
// gaussian: exp(-u^2/2); laplace: exp(-(2u-1)/2) everywhere (the u-space
// twin of the SOKS tail, used for ablations; note it exceeds 1 below
// u = 1/2); soks: the piecewise blend.
inline double similarity(double u, LossKind kind) {
  switch (kind) {
    case LossKind::gaussian: return std::exp(-0.5 * u * u);
    case LossKind::laplace: return std::exp(-0.5 * (2.0 * std::abs(u) - 1.0));
    case LossKind::soks: return soks_scalar(u);
  }
  return 0.0;
}

inline double similarity_derivative(double u, LossKind kind) {
  switch (kind) {
    case LossKind::gaussian: return -u * std::exp(-0.5 * u * u);
    case LossKind::laplace: {
      const double sign = u < 0.0 ? -1.0 : 1.0;
      return -sign * std::exp(-0.5 * (2.0 * std::abs(u) - 1.0));
    }
    case LossKind::soks: return soks_scalar_derivative(u);
  }
  return 0.0;
}

}  // namespace detail

// Pose-level SOKS: mean of soks_scalar(u_i) over visible GT keypoints.
inline double soks_pose(const Pose& pred, const GroundTruthInstance& gt,
                        const SigmaTable& sigmas) {
  const std::vector<double> u = normalized_errors(pred, gt, sigmas);
  double sum = 0.0;
  std::size_t visible = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (gt.pose.keypoints[i].v <= 0) continue;
    sum += soks_scalar(u[i]);
    ++visible;
  }
  if (visible == 0)
    throw NoVisibleKeypoints("soks_pose: no visible keypoints");
  return sum / static_cast<double>(visible);
}

// 1 minus the visible-mean similarity under the chosen kind.
inline double pose_loss(const Pose& pred, const GroundTruthInstance& gt,
                        const SigmaTable& sigmas, LossKind kind) {
  const std::vector<double> u = normalized_errors(pred, gt, sigmas);
  double sum = 0.0;
  std::size_t visible = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (gt.pose.keypoints[i].v <= 0) continue;
    sum += detail::similarity(u[i], kind);
    ++visible;
  }
  if (visible == 0)
    throw NoVisibleKeypoints("pose_loss: no visible keypoints");
  return 1.0 - sum / static_cast<double>(visible);
}

// Exact gradient of pose_loss with respect to each predicted coordinate.
// Invisible keypoints contribute (0,0); at d_i = 0 the contribution is
// defined as (0,0), the limit of the Gaussian branch.
inline std::vector<std::array<double, 2>> pose_loss_grad(
    const Pose& pred, const GroundTruthInstance& gt, const SigmaTable& sigmas,
    LossKind kind) {
  const std::size_t n = gt.pose.size();
  if (pred.size() != n || sigmas.size() != n)
    throw DimensionMismatch("pose_loss_grad: pred/gt/sigma sizes differ");
  if (!(gt.scale > 0.0))
    throw DegenerateScale("pose_loss_grad: instance scale must be > 0");
  const std::size_t visible = gt.pose.visible_count();
  if (visible == 0)
    throw NoVisibleKeypoints("pose_loss_grad: no visible keypoints");

  std::vector<std::array<double, 2>> grad(n, {0.0, 0.0});
  const double inv_n = 1.0 / static_cast<double>(visible);
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.pose.keypoints[i].v <= 0) continue;
    const double dx = pred.keypoints[i].x - gt.pose.keypoints[i].x;
    const double dy = pred.keypoints[i].y - gt.pose.keypoints[i].y;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d == 0.0) continue;
    const double sk = gt.scale * sigmas.k[i];
    const double u = d / sk;
    // dL/dx = -(1/n) * f'(u) * du/dx, du/dx = dx / (d * s * k).
    const double c = -inv_n * detail::similarity_derivative(u, kind) / (d * sk);
    grad[i] = {c * dx, c * dy};
  }
  return grad;
}

// Binary cross-entropy on a probability, with the input clamped into
// [eps, 1-eps] (eps = 1e-7) so boundary values stay finite.
inline double bce(double prob, int target) {
  if (target != 0 && target != 1)
    throw InvalidArgument("bce: target must be 0 or 1");
  constexpr double eps = 1e-7;
  const double p = std::fmin(std::fmax(prob, eps), 1.0 - eps);
  return target == 1 ? -std::log(p) : -std::log(1.0 - p);
}

struct LossWeights {
  double lambda_pose = 15.0;
  double lambda_vis = 1.0;
  double lambda_conf = 1.0;
};

inline double grid_loss(double l_pose, double l_vis, double l_conf,
                        const LossWeights& w = {}) {
  if (!(w.lambda_pose > 0.0) || !(w.lambda_vis > 0.0) ||
      !(w.lambda_conf > 0.0))
    throw InvalidArgument("grid_loss: weights must be strictly positive");
  return w.lambda_pose * l_pose + w.lambda_vis * l_vis + w.lambda_conf * l_conf;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // flat coordinate index: 2*keypoint + axis
  std::size_t num_points = 0;   // configurations actually compared
};

// Compares the analytic pose_loss gradient against central finite
// differences (h = 1e-5) over seeded random configurations. Configurations
// with any visible d_i < 1e-8 or |u_i^2 - 1| < 1e-4 are excluded: the first
// is the defined-zero point, the second straddles the SOKS branch boundary.
// Per-coordinate errors are measured relative to the largest gradient
// component of the trial.
inline GradCheckReport finite_diff_check(LossKind kind, std::size_t trials,
                                         std::uint64_t seed,
                                         unsigned jobs = 1) {
  if (trials < 1) throw InvalidArgument("finite_diff_check: trials must be >= 1");
  constexpr double h = 1e-5;
  constexpr std::size_t num_kp = 17;
  const SigmaTable sigmas = SigmaTable::uniform(num_kp);

  struct TrialResult {
    bool included = false;
    double rel = 0.0;
    std::size_t index = 0;
  };
  std::vector<TrialResult> results(trials);

  detail::parallel_for(trials, jobs, [&](std::size_t t) {
    detail::Rng rng = detail::Rng::stream(seed, t);
    // Scales of at least 50 keep u's step under finite differences (h/sk)
    // far inside the branch-boundary exclusion margin.
    const double area_side = rng.uniform(50.0, 200.0);
    Pose gt_pose;
    gt_pose.keypoints.resize(num_kp);
    Pose pred;
    pred.keypoints.resize(num_kp);
    bool any_visible = false;
    for (std::size_t i = 0; i < num_kp; ++i) {
      auto& kp = gt_pose.keypoints[i];
      kp.x = rng.uniform(0.0, 300.0);
      kp.y = rng.uniform(0.0, 300.0);
      kp.v = rng.uniform() < 0.8 ? 2 : 0;
      if (i + 1 == num_kp && !any_visible) kp.v = 2;
      if (kp.v > 0) any_visible = true;
      const double u_target = rng.uniform(0.05, 3.2);
      const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const double d = u_target * area_side * sigmas.k[i];
      pred.keypoints[i] = {kp.x + d * std::cos(angle),
                           kp.y + d * std::sin(angle), 2};
    }
    const GroundTruthInstance gt =
        make_instance(static_cast<std::int64_t>(t), gt_pose,
                      area_side * area_side);

    const std::vector<double> u = normalized_errors(pred, gt, sigmas);
    for (std::size_t i = 0; i < num_kp; ++i) {
      if (gt.pose.keypoints[i].v <= 0) continue;
      const double d = u[i] * gt.scale * sigmas.k[i];
      if (d < 1e-8 || std::abs(u[i] * u[i] - 1.0) < 1e-4) return;
    }

    const auto analytic = pose_loss_grad(pred, gt, sigmas, kind);
    std::vector<std::array<double, 2>> numeric(num_kp, {0.0, 0.0});
    Pose probe = pred;
    for (std::size_t i = 0; i < num_kp; ++i) {
      for (int axis = 0; axis < 2; ++axis) {
        double& coord = axis == 0 ? probe.keypoints[i].x : probe.keypoints[i].y;
        const double saved = coord;
        coord = saved + h;
        const double up = pose_loss(probe, gt, sigmas, kind);
        coord = saved - h;
        const double down = pose_loss(probe, gt, sigmas, kind);
        coord = saved;
        numeric[i][axis] = (up - down) / (2.0 * h);
      }
    }

    double scale = 1e-12;
    for (std::size_t i = 0; i < num_kp; ++i)
      for (int axis = 0; axis < 2; ++axis)
        scale = std::max({scale, std::abs(analytic[i][axis]),
                          std::abs(numeric[i][axis])});
    double worst = 0.0;
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < num_kp; ++i) {
      for (int axis = 0; axis < 2; ++axis) {
        const double rel =
            std::abs(analytic[i][axis] - numeric[i][axis]) / scale;
        if (rel > worst) {
          worst = rel;
          worst_idx = 2 * i + static_cast<std::size_t>(axis);
        }
      }
    }
    results[t] = {true, worst, worst_idx};
  });

  GradCheckReport report;
  for (const auto& r : results) {
    if (!r.included) continue;
    ++report.num_points;
    if (r.rel > report.max_rel_error) {
      report.max_rel_error = r.rel;
      report.worst_index = r.index;
    }
  }
  return report;
}

}  // namespace posekit
