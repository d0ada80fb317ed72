#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posekit/alignment.hpp"
#include "posekit/assignment.hpp"
#include "posekit/detail/parallel.hpp"
#include "posekit/detail/rng.hpp"
#include "posekit/errors.hpp"
#include "posekit/evaluation.hpp"
#include "posekit/pose.hpp"

namespace posekit {

// How candidate confidence is modeled. keypoint_driven ties confidence to
// the candidate's true OKS against its instance; box_driven ties it to the
// IoU of the candidate's tight keypoint box with the instance box, the
// detection-centric proxy whose ranking need not agree with pose quality.
enum class ConfRegime { keypoint_driven, box_driven };

inline const char* to_string(ConfRegime r) {
  return r == ConfRegime::keypoint_driven ? "keypoint_driven" : "box_driven";
}

inline std::optional<ConfRegime> regime_from_string(const std::string& s) {
  if (s == "keypoint_driven") return ConfRegime::keypoint_driven;
  if (s == "box_driven") return ConfRegime::box_driven;
  return std::nullopt;
}

struct SynthConfig {
  std::uint64_t seed = 0;
  double image_size = 256.0;
  int min_instances = 1;
  int max_instances = 4;
  std::size_t num_keypoints = 17;
  SigmaTable sigmas = SigmaTable::coco17();
  double noise_scale = 0.0;  // keypoint noise sigma, as a fraction of s
  ConfRegime regime = ConfRegime::keypoint_driven;
  double conf_noise = 0.0;  // uniform confidence jitter amplitude
  std::vector<PyramidLevel> levels = {PyramidLevel::P3, PyramidLevel::P4,
                                      PyramidLevel::P5};
  double min_separation_frac = 0.25;  // of image_size, between centers

  void validate() const {
    if (!(image_size > 0.0)) throw InvalidArgument("synth: image_size <= 0");
    if (min_instances < 1 || max_instances < min_instances)
      throw InvalidArgument("synth: bad instance range");
    if (num_keypoints == 0) throw InvalidArgument("synth: K must be >= 1");
    if (sigmas.size() != num_keypoints)
      throw DimensionMismatch("synth: sigma table does not match K");
    if (!(noise_scale >= 0.0)) throw InvalidArgument("synth: noise_scale < 0");
    if (!(conf_noise >= 0.0 && conf_noise <= 1.0))
      throw InvalidArgument("synth: conf_noise outside [0,1]");
    if (levels.empty()) throw InvalidArgument("synth: no pyramid levels");
  }
};

struct Scene {
  std::int64_t image_id = 0;
  std::vector<GroundTruthInstance> gts;
  std::vector<GridCandidate> cands;
};

namespace detail {

// Canonical upright template in unit-height coordinates (y grows downward).
// COCO-17 uses a hand-laid humanoid; other K fall back to a zig-zag along
// the body axis, which keeps all points distinct.
inline std::vector<std::array<double, 2>> template_points(std::size_t k) {
  if (k == 17) {
    return {{0.000, 0.080},  {0.035, 0.055},  {-0.035, 0.055},
            {0.070, 0.075},  {-0.070, 0.075}, {0.170, 0.220},
            {-0.170, 0.220}, {0.220, 0.380},  {-0.220, 0.380},
            {0.240, 0.540},  {-0.240, 0.540}, {0.100, 0.520},
            {-0.100, 0.520}, {0.110, 0.740},  {-0.110, 0.740},
            {0.120, 0.960},  {-0.120, 0.960}};
  }
  std::vector<std::array<double, 2>> pts(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    pts[i] = {0.18 * std::sin(2.39996 * static_cast<double>(i + 1)), t};
  }
  return pts;
}

inline double box_iou(const std::array<double, 4>& a,
                      const std::array<double, 4>& b) {
  const double ix = std::max(0.0, std::min(a[0] + a[2], b[0] + b[2]) -
                                      std::max(a[0], b[0]));
  const double iy = std::max(0.0, std::min(a[1] + a[3], b[1] + b[3]) -
                                      std::max(a[1], b[1]));
  const double inter = ix * iy;
  const double uni = a[2] * a[3] + b[2] * b[3] - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline std::array<double, 2> instance_center(const GroundTruthInstance& gt) {
  const auto b = gt.bbox ? *gt.bbox : tight_bbox(gt.pose);
  return {b[0] + 0.5 * b[2], b[1] + 0.5 * b[3]};
}

}  // namespace detail

// Index of the ground truth whose box center is closest to (x, y); ties go
// to the lower index. This is the ownership rule shared by the generator
// and by confidence-argmax selection.
inline std::size_t nearest_gt_index(double x, double y,
                                    const std::vector<GroundTruthInstance>& gts) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const auto c = detail::instance_center(gts[g]);
    const double dx = c[0] - x, dy = c[1] - y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = g;
    }
  }
  return best;
}

// Generates one scene, fully determined by (cfg.seed, scene_index) and
// independent of thread count. Ground truths are template poses under
// random scale/rotation/translation; every grid cell at the configured
// strides emits a candidate that copies its nearest instance's pose plus
// coordinate noise of magnitude noise_scale * s. The random stream is laid
// out so that changing the confidence regime changes no draw, which makes
// scenes exactly pairable across regimes.
inline Scene generate_scene(const SynthConfig& cfg, std::uint64_t scene_index) {
  cfg.validate();
  detail::Rng rng = detail::Rng::stream(cfg.seed, scene_index);
  Scene scene;
  scene.image_id = static_cast<std::int64_t>(scene_index);

  const int n = cfg.min_instances +
                static_cast<int>(rng.below(static_cast<std::uint64_t>(
                    cfg.max_instances - cfg.min_instances + 1)));
  const auto tmpl = detail::template_points(cfg.num_keypoints);
  const double sep = cfg.min_separation_frac * cfg.image_size;
  std::vector<std::array<double, 2>> centers;
  for (int inst = 0; inst < n; ++inst) {
    std::array<double, 2> center{};
    for (int attempt = 0; attempt < 64; ++attempt) {
      center = {rng.uniform(0.25, 0.75) * cfg.image_size,
                rng.uniform(0.25, 0.75) * cfg.image_size};
      bool ok = true;
      for (const auto& c : centers) {
        const double dx = c[0] - center[0], dy = c[1] - center[1];
        if (dx * dx + dy * dy < sep * sep) ok = false;
      }
      if (ok) break;
    }
    centers.push_back(center);
    const double height = rng.uniform(0.25, 0.5) * cfg.image_size;
    const double angle = rng.uniform(-0.45, 0.45);  // radians
    const double ca = std::cos(angle), sa = std::sin(angle);
    Pose pose;
    pose.keypoints.resize(cfg.num_keypoints);
    double mx = 0.0, my = 0.0;
    for (const auto& p : tmpl) {
      mx += p[0];
      my += p[1];
    }
    mx /= static_cast<double>(tmpl.size());
    my /= static_cast<double>(tmpl.size());
    for (std::size_t i = 0; i < cfg.num_keypoints; ++i) {
      const double px = (tmpl[i][0] - mx) * height;
      const double py = (tmpl[i][1] - my) * height;
      pose.keypoints[i] = {center[0] + ca * px - sa * py,
                           center[1] + sa * px + ca * py, 2};
    }
    auto box = tight_bbox(pose);
    // Floor the extent so single-point poses still carry a usable scale.
    box[2] = std::max(box[2], 0.01 * cfg.image_size);
    box[3] = std::max(box[3], 0.01 * cfg.image_size);
    const double area = box[2] * box[3];
    scene.gts.push_back(make_instance(
        static_cast<std::int64_t>(scene_index * 1000 + inst), pose, area, box));
  }

  for (const PyramidLevel level : cfg.levels) {
    const int stride = stride_of(level);
    const int cells = static_cast<int>(std::ceil(cfg.image_size / stride));
    for (int row = 0; row < cells; ++row) {
      for (int col = 0; col < cells; ++col) {
        const double cx = (col + 0.5) * stride;
        const double cy = (row + 0.5) * stride;
        const std::size_t g = nearest_gt_index(cx, cy, scene.gts);
        const GroundTruthInstance& gt = scene.gts[g];
        Pose pose;
        pose.keypoints.resize(cfg.num_keypoints);
        std::vector<double> vis(cfg.num_keypoints);
        for (std::size_t i = 0; i < cfg.num_keypoints; ++i) {
          const double nx = rng.normal();
          const double ny = rng.normal();
          pose.keypoints[i] = {
              gt.pose.keypoints[i].x + cfg.noise_scale * gt.scale * nx,
              gt.pose.keypoints[i].y + cfg.noise_scale * gt.scale * ny, 2};
          vis[i] = 0.7 + 0.3 * rng.uniform();
        }
        const double eta = rng.uniform(-1.0, 1.0);
        const double oks_val = oks(pose, gt, cfg.sigmas);
        const double iou_val = detail::box_iou(tight_bbox(pose), *gt.bbox);
        const double base =
            cfg.regime == ConfRegime::keypoint_driven ? oks_val : iou_val;
        const double conf =
            std::clamp(base + cfg.conf_noise * eta, 0.0, 1.0);
        scene.cands.push_back(
            make_candidate(level, row, col, conf, std::move(pose), std::move(vis)));
      }
    }
  }
  return scene;
}

// OKS matrix of a scene: rows are ground truths, columns all candidates.
inline OksMatrix scene_oks_matrix(const Scene& scene, const SigmaTable& sigmas) {
  if (scene.gts.empty() || scene.cands.empty())
    throw InvalidArgument("scene_oks_matrix: empty scene");
  std::vector<double> values;
  values.reserve(scene.gts.size() * scene.cands.size());
  for (const auto& gt : scene.gts)
    for (const auto& cand : scene.cands)
      values.push_back(oks(cand.pose, gt, sigmas));
  return OksMatrix(scene.gts.size(), scene.cands.size(), std::move(values));
}

// Inference-style selection: within each ground truth's nearest-cell group,
// the candidate with the highest confidence (ties to the lower index).
// Ground truths owning no cells stay unselected.
inline std::vector<std::optional<std::size_t>> select_conf_argmax(
    const Scene& scene) {
  std::vector<std::optional<std::size_t>> selected(scene.gts.size(),
                                                   std::nullopt);
  for (std::size_t c = 0; c < scene.cands.size(); ++c) {
    const auto& cand = scene.cands[c];
    const std::size_t g =
        nearest_gt_index(cand.center_x(), cand.center_y(), scene.gts);
    if (!selected[g] || cand.conf > scene.cands[*selected[g]].conf)
      selected[g] = c;
  }
  return selected;
}

// Detections corresponding to a selection, scored by candidate confidence.
inline std::vector<Detection> selection_to_detections(
    const Scene& scene, const std::vector<std::optional<std::size_t>>& selected) {
  std::vector<Detection> dets;
  for (std::size_t g = 0; g < selected.size(); ++g) {
    if (!selected[g]) continue;
    const auto& cand = scene.cands[*selected[g]];
    dets.push_back({scene.image_id, cand.pose, cand.conf, scene.gts[g].id});
  }
  return dets;
}

struct SweepRow {
  ConfRegime regime = ConfRegime::keypoint_driven;
  double noise_scale = 0.0;
  double conf_noise = 0.0;
  double mean_tae = 0.0;
  double ap = 0.0;
  std::vector<double> scene_tae;  // per scene, index-aligned across regimes
};

struct SweepConfig {
  SynthConfig base;
  std::vector<double> noise_levels = {0.04, 0.08, 0.16};
  // Confidence jitter per level; when empty each level uses half its pose
  // noise, so the whole ladder scales together.
  std::vector<double> conf_noise_levels;
  std::vector<ConfRegime> regimes = {ConfRegime::keypoint_driven,
                                     ConfRegime::box_driven};
  std::size_t scenes_per_config = 50;
  unsigned jobs = 1;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double spearman_tae_ap = 0.0;
};

// Runs generate -> confidence-argmax selection -> TAE and AP for every
// (regime, noise) cell of the grid. Scene indices are shared across cells,
// so rows with the same noise level are paired scene by scene.
inline SweepResult sweep_tae_vs_ap(const SweepConfig& sweep) {
  if (sweep.noise_levels.size() < 3)
    throw InvalidArgument("sweep: need at least 3 noise levels");
  if (sweep.scenes_per_config < 1)
    throw InvalidArgument("sweep: need at least 1 scene per config");
  if (!sweep.conf_noise_levels.empty() &&
      sweep.conf_noise_levels.size() != sweep.noise_levels.size())
    throw DimensionMismatch("sweep: conf_noise_levels length mismatch");
  SweepResult result;
  for (const ConfRegime regime : sweep.regimes) {
    for (std::size_t lvl = 0; lvl < sweep.noise_levels.size(); ++lvl) {
      const double noise = sweep.noise_levels[lvl];
      SynthConfig cfg = sweep.base;
      cfg.regime = regime;
      cfg.noise_scale = noise;
      cfg.conf_noise = sweep.conf_noise_levels.empty()
                           ? std::min(1.0, 0.5 * noise)
                           : sweep.conf_noise_levels[lvl];
      SweepRow row;
      row.regime = regime;
      row.noise_scale = noise;
      row.conf_noise = cfg.conf_noise;
      row.scene_tae.assign(sweep.scenes_per_config, 0.0);
      std::vector<std::vector<Detection>> dets(sweep.scenes_per_config);
      std::vector<ImageAnnotations> images(sweep.scenes_per_config);
      detail::parallel_for(
          sweep.scenes_per_config, sweep.jobs, [&](std::size_t s) {
            const Scene scene = generate_scene(cfg, s);
            const auto selected = select_conf_argmax(scene);
            const OksMatrix m = scene_oks_matrix(scene, cfg.sigmas);
            row.scene_tae[s] = tae(m, selected);
            dets[s] = selection_to_detections(scene, selected);
            images[s] = {scene.image_id, scene.gts};
          });
      double sum = 0.0;
      for (double t : row.scene_tae) sum += t;
      row.mean_tae = sum / static_cast<double>(sweep.scenes_per_config);
      std::vector<Detection> all_dets;
      for (auto& d : dets)
        all_dets.insert(all_dets.end(), d.begin(), d.end());
      EvalParams params;
      params.jobs = sweep.jobs;
      const EvalSummary summary =
          evaluate(all_dets, images, cfg.sigmas, params);
      row.ap = summary.ap.value_or(0.0);
      result.rows.push_back(std::move(row));
    }
  }
  std::vector<double> taes, aps;
  for (const auto& row : result.rows) {
    taes.push_back(row.mean_tae);
    aps.push_back(row.ap);
  }
  result.spearman_tae_ap = spearman(taes, aps);
  return result;
}

}  // namespace posekit
