// posekit command-line tool: similarity, losses, assignment, alignment,
// suppression, evaluation and synthetic-data subcommands over COCO-style
// files. Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "posekit/detail/format.hpp"
#include "posekit/posekit.hpp"

namespace fs = std::filesystem;
using posekit::detail::format_double;

namespace {

struct GlobalOptions {
  std::string sigmas = "coco17";
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  unsigned jobs = posekit::detail::default_jobs();
  int verbosity = 0;

  bool machine() const { return format == "machine"; }
};

std::string fd(double v) { return format_double(v); }

// Sigma preset resolution: built-ins first, then preset files named
// "<name>" or "<name>.sigmas" under the POSEKIT_SIGMA_PATH directories
// (colon separated), holding whitespace-separated k values.
posekit::SigmaTable resolve_sigmas(const std::string& name,
                                   std::size_t context_k) {
  if (auto builtin = posekit::sigma_preset(name, context_k)) {
    if (context_k != 0 && builtin->size() != context_k)
      throw posekit::DimensionMismatch(
          "sigma preset '" + name + "' has " +
          std::to_string(builtin->size()) + " entries but data has K = " +
          std::to_string(context_k));
    return *builtin;
  }
  std::vector<fs::path> candidates;
  if (fs::exists(name)) candidates.push_back(name);
  if (const char* env = std::getenv("POSEKIT_SIGMA_PATH")) {
    std::stringstream ss(env);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
      if (dir.empty()) continue;
      candidates.push_back(fs::path(dir) / name);
      candidates.push_back(fs::path(dir) / (name + ".sigmas"));
    }
  }
  for (const auto& path : candidates) {
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    posekit::SigmaTable table;
    double k = 0.0;
    while (in >> k) table.k.push_back(k);
    table.validate();
    if (context_k != 0 && table.size() != context_k)
      throw posekit::DimensionMismatch("sigma file " + path.string() +
                                       " does not match data K");
    return table;
  }
  throw posekit::InvalidArgument("unknown sigma preset '" + name + "'");
}

void echo_seed(const GlobalOptions& g, std::ostream& os) {
  if (!g.seed) return;
  if (g.machine())
    os << "seed=" << *g.seed << "\n";
  else
    os << "seed: " << *g.seed << "\n";
}

std::uint64_t require_seed(GlobalOptions& g, const char* what) {
  if (g.seed) return *g.seed;
  if (g.machine())
    throw posekit::InvalidArgument(
        std::string(what) +
        " needs --seed in machine-readable mode (reproducibility contract)");
  std::random_device rd;
  g.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "note: no --seed given, using " << *g.seed << "\n";
  return *g.seed;
}

struct LoadedGt {
  posekit::Dataset dataset;
  std::vector<posekit::ImageAnnotations> images;
  std::map<std::int64_t, std::vector<posekit::GroundTruthInstance>> by_image;
};

LoadedGt load_gt(const std::string& path) {
  LoadedGt out;
  out.dataset = posekit::load_dataset(path);
  out.images = posekit::dataset_to_ground_truth(out.dataset);
  for (const auto& img : out.images) out.by_image[img.image_id] = img.gts;
  return out;
}

// Results grouped per image in file order, dropping entries for unknown
// images with a warning (evaluation skips them by contract).
std::map<std::int64_t, std::vector<posekit::ResultEntry>> group_results(
    const posekit::ResultSet& rs, const LoadedGt& gt, std::size_t expected_k) {
  std::map<std::int64_t, std::vector<posekit::ResultEntry>> grouped;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs[i];
    if (expected_k != 0 && r.keypoints.size() != 3 * expected_k)
      throw posekit::SchemaError("result " + std::to_string(i) +
                                 ": keypoint count does not match dataset K");
    if (!gt.by_image.count(r.image_id)) {
      std::cerr << "warning: result " << i << " references unknown image "
                << r.image_id << " (retained in file, skipped here)\n";
      continue;
    }
    grouped[r.image_id].push_back(r);
  }
  return grouped;
}

// ---------------------------------------------------------------------------

struct OksArgs {
  std::string gt_path, preds_path;
};

int run_oks(const GlobalOptions& g, const OksArgs& a) {
  const LoadedGt gt = load_gt(a.gt_path);
  const auto rs = posekit::load_results(a.preds_path);
  const auto sigmas = resolve_sigmas(g.sigmas, gt.dataset.num_keypoints());
  const auto grouped = group_results(rs, gt, gt.dataset.num_keypoints());
  echo_seed(g, std::cout);
  for (const auto& [image_id, preds] : grouped) {
    const auto& gts = gt.by_image.at(image_id);
    if (gts.empty()) continue;
    if (!g.machine()) std::cout << "image " << image_id << ":\n";
    for (const auto& instance : gts) {
      for (std::size_t p = 0; p < preds.size(); ++p) {
        const double v =
            posekit::oks(posekit::result_pose(preds[p]), instance, sigmas);
        if (g.machine())
          std::cout << "image=" << image_id << " gt=" << instance.id
                    << " pred=" << p << " oks=" << fd(v) << "\n";
        else
          std::cout << "  gt " << instance.id << " vs pred " << p << ": "
                    << fd(v) << "\n";
      }
    }
  }
  return 0;
}

struct LossCheckArgs {
  std::string kind = "soks";
  std::size_t trials = 1000;
};

int run_loss_check(GlobalOptions& g, const LossCheckArgs& a) {
  posekit::LossKind kind;
  if (a.kind == "gaussian")
    kind = posekit::LossKind::gaussian;
  else if (a.kind == "laplace")
    kind = posekit::LossKind::laplace;
  else if (a.kind == "soks")
    kind = posekit::LossKind::soks;
  else
    throw posekit::InvalidArgument("unknown loss kind '" + a.kind + "'");
  const std::uint64_t seed = require_seed(g, "loss-check");
  const auto report = posekit::finite_diff_check(kind, a.trials, seed, g.jobs);
  std::cout << "kind=" << a.kind << "\n"
            << "trials=" << a.trials << "\n"
            << "seed=" << seed << "\n"
            << "max_rel_error=" << fd(report.max_rel_error) << "\n"
            << "worst_index=" << report.worst_index << "\n"
            << "num_points=" << report.num_points << "\n";
  return 0;
}

struct AssignArgs {
  double alpha = 0.5;
  double beta = 6.0;
  std::size_t topk = 10;
  std::string head = "mah";
  std::string gt_path, cands_path;
};

int run_assign(const GlobalOptions& g, const AssignArgs& a) {
  const LoadedGt gt = load_gt(a.gt_path);
  const auto cands =
      posekit::load_candidates(a.cands_path, gt.dataset.num_keypoints());
  const auto sigmas = resolve_sigmas(g.sigmas, gt.dataset.num_keypoints());
  const posekit::AssignParams params{a.alpha, a.beta, a.topk};
  echo_seed(g, std::cout);
  for (const auto& [image_id, image_cands] : cands) {
    const auto it = gt.by_image.find(image_id);
    if (it == gt.by_image.end() || it->second.empty()) {
      std::cerr << "warning: image " << image_id
                << " has candidates but no usable ground truth; skipped\n";
      continue;
    }
    const auto& gts = it->second;
    const posekit::AssignmentResult result =
        a.head == "sah"
            ? posekit::assign_sah(gts, image_cands, sigmas, params)
            : posekit::assign_mah(gts, image_cands, sigmas, params);
    if (!g.machine()) std::cout << "image " << image_id << ":\n";
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      for (std::size_t rank = 0; rank < result.per_gt[gi].size(); ++rank) {
        const auto& entry = result.per_gt[gi][rank];
        if (g.machine())
          std::cout << "type=topk image=" << image_id << " gt=" << gts[gi].id
                    << " rank=" << rank << " cand=" << entry.candidate
                    << " score=" << fd(entry.score) << "\n";
        else
          std::cout << "  gt " << gts[gi].id << " #" << rank << ": cand "
                    << entry.candidate << " score " << fd(entry.score) << "\n";
      }
    }
    for (const auto& p : result.positives) {
      if (g.machine())
        std::cout << "type=positive image=" << image_id
                  << " cand=" << p.candidate << " owner="
                  << gts[p.owner_gt].id << " score=" << fd(p.score) << "\n";
      else
        std::cout << "  positive cand " << p.candidate << " -> gt "
                  << gts[p.owner_gt].id << " (score " << fd(p.score) << ")\n";
    }
  }
  return 0;
}

struct TaeArgs {
  std::string gt_path, preds_path, selected_path;
  std::string dump_dir;
};

int run_tae(const GlobalOptions& g, const TaeArgs& a) {
  const LoadedGt gt = load_gt(a.gt_path);
  const auto rs = posekit::load_results(a.preds_path);
  const auto sigmas = resolve_sigmas(g.sigmas, gt.dataset.num_keypoints());
  const auto grouped = group_results(rs, gt, gt.dataset.num_keypoints());

  // Selected file: one "image_id gt_id pred_index" triple per line.
  std::map<std::int64_t, std::map<std::int64_t, std::size_t>> selected;
  {
    std::ifstream in(a.selected_path);
    if (!in)
      throw posekit::ParseError("cannot open " + a.selected_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::int64_t image_id = 0, gt_id = 0;
      std::size_t pred_index = 0;
      if (!(ss >> image_id >> gt_id >> pred_index))
        throw posekit::ParseError(a.selected_path + ":" +
                                  std::to_string(line_no) +
                                  ": expected image_id gt_id pred_index");
      selected[image_id][gt_id] = pred_index;
    }
  }

  if (!a.dump_dir.empty()) fs::create_directories(a.dump_dir);
  echo_seed(g, std::cout);
  double sum = 0.0;
  std::size_t images = 0;
  for (const auto& [image_id, gts] : gt.by_image) {
    if (gts.empty()) continue;
    const auto pit = grouped.find(image_id);
    double value = 0.0;
    if (pit != grouped.end() && !pit->second.empty()) {
      const auto& preds = pit->second;
      std::vector<double> values;
      values.reserve(gts.size() * preds.size());
      for (const auto& instance : gts)
        for (const auto& pred : preds)
          values.push_back(
              posekit::oks(posekit::result_pose(pred), instance, sigmas));
      const posekit::OksMatrix matrix(gts.size(), preds.size(),
                                      std::move(values));
      std::vector<std::optional<std::size_t>> sel(gts.size());
      const auto sit = selected.find(image_id);
      for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (sit == selected.end()) break;
        const auto entry = sit->second.find(gts[gi].id);
        if (entry != sit->second.end()) sel[gi] = entry->second;
      }
      value = posekit::tae(matrix, sel);
      if (!a.dump_dir.empty()) {
        std::ofstream dump(fs::path(a.dump_dir) /
                           ("oks_" + std::to_string(image_id) + ".txt"));
        for (std::size_t i = 0; i < matrix.rows; ++i) {
          for (std::size_t j = 0; j < matrix.cols; ++j)
            dump << (j ? " " : "") << fd(matrix.at(i, j));
          dump << "\n";
        }
      }
    }
    // No predictions: both the optimal and the selected totals are zero.
    sum += value;
    ++images;
    if (g.machine())
      std::cout << "image=" << image_id << " tae=" << fd(value) << "\n";
    else
      std::cout << "image " << image_id << ": tae " << fd(value) << "\n";
  }
  const double mean = images ? sum / static_cast<double>(images) : 0.0;
  if (g.machine())
    std::cout << "images=" << images << "\nmean_tae=" << fd(mean) << "\n";
  else
    std::printf("mean tae over %zu images: %.3f\n", images, mean);
  return 0;
}

struct NmsArgs {
  double thr = 0.6;
  std::string preds_path;
  std::string out_path;
  std::string scale_ref = "kept";
};

int run_nms(const GlobalOptions& g, const NmsArgs& a) {
  const auto rs = posekit::load_results(a.preds_path);
  std::size_t k = rs.empty() ? 1 : rs[0].keypoints.size() / 3;
  const auto sigmas = resolve_sigmas(g.sigmas, k);
  posekit::PairwiseScale convention = posekit::PairwiseScale::kept;
  if (a.scale_ref == "candidate")
    convention = posekit::PairwiseScale::candidate;
  else if (a.scale_ref == "mean")
    convention = posekit::PairwiseScale::geometric_mean;
  else if (a.scale_ref != "kept")
    throw posekit::InvalidArgument("unknown scale convention '" +
                                   a.scale_ref + "'");

  std::map<std::int64_t, std::vector<std::size_t>> per_image;  // file indices
  for (std::size_t i = 0; i < rs.size(); ++i)
    per_image[rs[i].image_id].push_back(i);

  posekit::ResultSet kept_results;
  std::size_t kept_total = 0;
  for (const auto& [image_id, indices] : per_image) {
    std::vector<posekit::ScoredPose> cands;
    cands.reserve(indices.size());
    for (const auto idx : indices) {
      posekit::ScoredPose sp;
      sp.pose = posekit::result_pose(rs[idx]);
      sp.conf = rs[idx].score;
      const auto box = posekit::tight_bbox(sp.pose);
      sp.scale = std::max(std::sqrt(box[2] * box[3]), 1e-6);
      cands.push_back(std::move(sp));
    }
    auto kept = posekit::oks_nms(cands, sigmas, a.thr, convention);
    std::sort(kept.begin(), kept.end());
    for (const auto local : kept) kept_results.push_back(rs[indices[local]]);
    kept_total += kept.size();
  }

  if (!a.out_path.empty()) {
    posekit::save_results(kept_results, a.out_path);
    echo_seed(g, std::cout);
    if (g.machine())
      std::cout << "kept=" << kept_total << "\ntotal=" << rs.size()
                << "\nout=" << a.out_path << "\n";
    else
      std::cout << "kept " << kept_total << " of " << rs.size() << " -> "
                << a.out_path << "\n";
  } else {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : kept_results)
      doc.push_back({{"image_id", r.image_id},
                     {"category_id", r.category_id},
                     {"keypoints", r.keypoints},
                     {"score", r.score}});
    std::cout << doc.dump(1) << "\n";
    std::cerr << "kept " << kept_total << " of " << rs.size() << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string gt_path, preds_path;
  std::size_t max_dets = 20;
};

void print_metric(const GlobalOptions& g, const char* key, const char* label,
                  const std::optional<double>& value) {
  if (g.machine()) {
    std::cout << key << "=" << (value ? fd(*value) : "-1") << "\n";
  } else {
    if (value)
      std::printf(" %-5s = %.3f\n", label, *value);
    else
      std::printf(" %-5s = undefined (no ground truth in range)\n", label);
  }
}

int run_eval(const GlobalOptions& g, const EvalArgs& a) {
  const LoadedGt gt = load_gt(a.gt_path);
  const auto rs = posekit::load_results(a.preds_path);
  const auto sigmas = resolve_sigmas(g.sigmas, gt.dataset.num_keypoints());
  const auto grouped = group_results(rs, gt, gt.dataset.num_keypoints());
  std::vector<posekit::Detection> dets;
  for (const auto& [image_id, preds] : grouped)
    for (const auto& r : preds)
      dets.push_back({image_id, posekit::result_pose(r), r.score, std::nullopt});
  posekit::EvalParams params;
  params.max_dets = a.max_dets;
  params.jobs = g.jobs;
  const auto summary = posekit::evaluate(dets, gt.images, sigmas, params);
  echo_seed(g, std::cout);
  print_metric(g, "ap", "AP", summary.ap);
  print_metric(g, "ap50", "AP50", summary.ap50);
  print_metric(g, "ap75", "AP75", summary.ap75);
  print_metric(g, "ap_medium", "APm", summary.ap_medium);
  print_metric(g, "ap_large", "APl", summary.ap_large);
  print_metric(g, "ar", "AR", summary.ar);
  return 0;
}

struct SynthArgs {
  std::size_t scenes = 10;
  double noise = 0.0;
  double conf_noise = 0.0;
  std::string regime = "keypoint_driven";
  std::string out_dir;
  double image_size = 256.0;
  std::size_t kpts = 17;
  int min_instances = 1;
  int max_instances = 4;
  std::size_t pool_size = 8;
};

posekit::SynthConfig make_synth_config(const GlobalOptions& g,
                                       const SynthArgs& a,
                                       std::uint64_t seed) {
  posekit::SynthConfig cfg;
  cfg.seed = seed;
  cfg.image_size = a.image_size;
  cfg.num_keypoints = a.kpts;
  cfg.min_instances = a.min_instances;
  cfg.max_instances = a.max_instances;
  cfg.noise_scale = a.noise;
  cfg.conf_noise = a.conf_noise;
  const auto regime = posekit::regime_from_string(a.regime);
  if (!regime)
    throw posekit::InvalidArgument("unknown regime '" + a.regime + "'");
  cfg.regime = *regime;
  if (g.sigmas == "coco17" && a.kpts != 17)
    cfg.sigmas = posekit::SigmaTable::uniform(a.kpts);
  else
    cfg.sigmas = resolve_sigmas(g.sigmas, a.kpts);
  return cfg;
}

int run_synth(GlobalOptions& g, const SynthArgs& a) {
  if (a.out_dir.empty())
    throw posekit::InvalidArgument("synth needs --out DIR");
  const std::uint64_t seed = require_seed(g, "synth");
  const posekit::SynthConfig cfg = make_synth_config(g, a, seed);
  fs::create_directories(a.out_dir);

  posekit::Dataset ds;
  for (std::size_t i = 0; i < cfg.num_keypoints; ++i)
    ds.category.keypoint_names.push_back("kp_" + std::to_string(i));
  std::map<std::int64_t, std::vector<posekit::GridCandidate>> cands;
  posekit::ResultSet results;  // the selected (inference-output) predictions
  posekit::ResultSet pool;     // top candidates per instance, for TAE studies
  std::ofstream selected_file(fs::path(a.out_dir) / "selected.txt");
  selected_file << "# image_id gt_id pred_index (into pool.json)\n";

  const auto to_entry = [](const posekit::Scene& scene,
                           const posekit::GridCandidate& cand) {
    posekit::ResultEntry e;
    e.image_id = scene.image_id;
    for (std::size_t i = 0; i < cand.pose.size(); ++i) {
      e.keypoints.push_back(cand.pose.keypoints[i].x);
      e.keypoints.push_back(cand.pose.keypoints[i].y);
      e.keypoints.push_back(cand.vis_probs[i]);
    }
    e.score = cand.conf;
    return e;
  };

  for (std::size_t s = 0; s < a.scenes; ++s) {
    const posekit::Scene scene = posekit::generate_scene(cfg, s);
    ds.images.push_back({scene.image_id, static_cast<int>(cfg.image_size),
                         static_cast<int>(cfg.image_size)});
    for (const auto& gt : scene.gts) {
      posekit::Annotation ann;
      ann.id = gt.id;
      ann.image_id = scene.image_id;
      for (const auto& kp : gt.pose.keypoints) {
        ann.keypoints.push_back(kp.x);
        ann.keypoints.push_back(kp.y);
        ann.keypoints.push_back(kp.v);
      }
      ann.area = gt.area;
      ann.bbox = gt.bbox;
      ann.num_keypoints = static_cast<int>(gt.pose.visible_count());
      ds.annotations.push_back(std::move(ann));
    }
    cands[scene.image_id] = scene.cands;

    // Group candidates by their owning instance; each group's head (highest
    // confidence, ties to the lower index) is the selected prediction, and
    // the top pool_size of the group feed the TAE pool.
    std::vector<std::vector<std::size_t>> groups(scene.gts.size());
    for (std::size_t c = 0; c < scene.cands.size(); ++c)
      groups[posekit::nearest_gt_index(scene.cands[c].center_x(),
                                       scene.cands[c].center_y(), scene.gts)]
          .push_back(c);
    std::size_t pool_index = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      auto& group = groups[gi];
      if (group.empty()) continue;
      std::sort(group.begin(), group.end(), [&](std::size_t x, std::size_t y) {
        if (scene.cands[x].conf != scene.cands[y].conf)
          return scene.cands[x].conf > scene.cands[y].conf;
        return x < y;
      });
      if (group.size() > a.pool_size) group.resize(a.pool_size);
      results.push_back(to_entry(scene, scene.cands[group[0]]));
      selected_file << scene.image_id << " " << scene.gts[gi].id << " "
                    << pool_index << "\n";
      for (const std::size_t c : group) {
        pool.push_back(to_entry(scene, scene.cands[c]));
        ++pool_index;
      }
    }
    if (g.verbosity > 0)
      std::cerr << "scene " << s << ": " << scene.gts.size() << " instances, "
                << scene.cands.size() << " candidates\n";
  }

  posekit::save_dataset(ds, fs::path(a.out_dir) / "dataset.json");
  posekit::save_candidates(cands, fs::path(a.out_dir) / "candidates.txt");
  posekit::save_results(results, fs::path(a.out_dir) / "results.json");
  posekit::save_results(pool, fs::path(a.out_dir) / "pool.json");

  echo_seed(g, std::cout);
  if (g.machine()) {
    std::cout << "scenes=" << a.scenes << "\nregime=" << a.regime
              << "\nnoise=" << fd(a.noise) << "\nout=" << a.out_dir << "\n"
              << "dataset=" << (fs::path(a.out_dir) / "dataset.json").string()
              << "\ncandidates="
              << (fs::path(a.out_dir) / "candidates.txt").string()
              << "\nresults="
              << (fs::path(a.out_dir) / "results.json").string()
              << "\npool=" << (fs::path(a.out_dir) / "pool.json").string()
              << "\nselected="
              << (fs::path(a.out_dir) / "selected.txt").string() << "\n";
  } else {
    std::cout << "wrote " << a.scenes << " scenes (" << a.regime
              << ", noise " << fd(a.noise) << ") to " << a.out_dir << "\n";
  }
  return 0;
}

struct SweepArgs {
  std::size_t scenes = 50;
  std::vector<double> noise_levels = {0.04, 0.08, 0.16};
  std::vector<double> conf_noise_levels;
  std::string out_dir;
  double image_size = 256.0;
};

int run_sweep(GlobalOptions& g, const SweepArgs& a) {
  const std::uint64_t seed = require_seed(g, "synth sweep");
  posekit::SweepConfig sw;
  sw.base.seed = seed;
  sw.base.image_size = a.image_size;
  sw.noise_levels = a.noise_levels;
  sw.conf_noise_levels = a.conf_noise_levels;
  sw.scenes_per_config = a.scenes;
  sw.jobs = g.jobs;
  const posekit::SweepResult res = posekit::sweep_tae_vs_ap(sw);

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    std::ofstream table(fs::path(a.out_dir) / "sweep_table.tsv");
    table << "regime\tnoise\tconf_noise\tmean_tae\tap\n";
    for (const auto& row : res.rows)
      table << posekit::to_string(row.regime) << "\t" << fd(row.noise_scale)
            << "\t" << fd(row.conf_noise) << "\t" << fd(row.mean_tae) << "\t"
            << fd(row.ap) << "\n";
    std::ofstream points(fs::path(a.out_dir) / "sweep_points.tsv");
    points << "regime\tnoise\tscene\ttae\n";
    for (const auto& row : res.rows)
      for (std::size_t s = 0; s < row.scene_tae.size(); ++s)
        points << posekit::to_string(row.regime) << "\t"
               << fd(row.noise_scale) << "\t" << s << "\t"
               << fd(row.scene_tae[s]) << "\n";
  }

  echo_seed(g, std::cout);
  if (g.machine()) {
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& row = res.rows[i];
      std::cout << "row=" << i << " regime=" << posekit::to_string(row.regime)
                << " noise=" << fd(row.noise_scale)
                << " conf_noise=" << fd(row.conf_noise)
                << " mean_tae=" << fd(row.mean_tae) << " ap=" << fd(row.ap)
                << "\n";
    }
    std::cout << "spearman_tae_ap=" << fd(res.spearman_tae_ap) << "\n";
  } else {
    std::printf("%-16s %-7s %-11s %-9s %s\n", "regime", "noise", "conf_noise",
                "mean_tae", "ap");
    for (const auto& row : res.rows)
      std::printf("%-16s %-7.3f %-11.3f %-9.4f %.4f\n",
                  posekit::to_string(row.regime), row.noise_scale,
                  row.conf_noise, row.mean_tae, row.ap);
    std::printf("spearman(TAE, AP) = %.4f\n", res.spearman_tae_ap);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posekit: keypoint similarity, assignment, alignment and "
               "evaluation toolkit"};
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--sigmas", g.sigmas,
                 "sigma preset: coco17, crowdpose14, uniform, uniform(K), or "
                 "a preset file (POSEKIT_SIGMA_PATH is searched)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "deterministic seed");
  app.add_option("--format", g.format, "output format: text or machine")
      ->check(CLI::IsMember({"text", "machine"}));
  app.add_option("--jobs", g.jobs, "worker threads (1 = sequential)");
  app.add_flag("-v,--verbose", g.verbosity, "more progress output on stderr");

  OksArgs oks_args;
  auto* oks_cmd = app.add_subcommand("oks", "pairwise OKS between ground "
                                            "truths and predictions");
  oks_cmd->add_option("--gt", oks_args.gt_path, "COCO keypoint annotations")
      ->required();
  oks_cmd->add_option("--preds", oks_args.preds_path, "COCO keypoint results")
      ->required();

  LossCheckArgs loss_args;
  auto* loss_cmd = app.add_subcommand(
      "loss-check", "verify analytic loss gradients against finite differences");
  loss_cmd->add_option("--kind", loss_args.kind, "gaussian, laplace or soks")
      ->check(CLI::IsMember({"gaussian", "laplace", "soks"}));
  loss_cmd->add_option("--trials", loss_args.trials, "random configurations");

  AssignArgs assign_args;
  auto* assign_cmd =
      app.add_subcommand("assign", "dynamic positive-sample assignment");
  assign_cmd->add_option("--alpha", assign_args.alpha, "confidence exponent");
  assign_cmd->add_option("--beta", assign_args.beta, "OKS exponent");
  assign_cmd->add_option("--topk", assign_args.topk, "positives per instance");
  assign_cmd->add_option("--head", assign_args.head, "mah or sah")
      ->check(CLI::IsMember({"mah", "sah"}));
  assign_cmd->add_option("--gt", assign_args.gt_path, "annotations")->required();
  assign_cmd->add_option("--cands", assign_args.cands_path, "candidate file")
      ->required();

  TaeArgs tae_args;
  auto* tae_cmd = app.add_subcommand(
      "tae", "task alignment error of a selection against the OKS optimum");
  tae_cmd->add_option("--gt", tae_args.gt_path, "annotations")->required();
  tae_cmd->add_option("--preds", tae_args.preds_path, "results")->required();
  tae_cmd->add_option("--selected", tae_args.selected_path,
                      "selection file: image_id gt_id pred_index per line")
      ->required();
  tae_cmd->add_option("--dump-matrix", tae_args.dump_dir,
                      "write per-image OKS matrices into this directory");

  NmsArgs nms_args;
  auto* nms_cmd = app.add_subcommand("nms", "greedy OKS-based suppression");
  nms_cmd->add_option("--thr", nms_args.thr, "suppression threshold in (0,1)");
  nms_cmd->add_option("--preds", nms_args.preds_path, "results")->required();
  nms_cmd->add_option("--out", nms_args.out_path, "write kept results here");
  nms_cmd->add_option("--scale-ref", nms_args.scale_ref,
                      "pairwise OKS scale: kept, candidate or mean");

  EvalArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("eval", "COCO-protocol keypoint AP/AR evaluation");
  eval_cmd->add_option("--gt", eval_args.gt_path, "annotations")->required();
  eval_cmd->add_option("--preds", eval_args.preds_path, "results")->required();
  eval_cmd->add_option("--max-dets", eval_args.max_dets,
                       "per-image detection cap");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate synthetic scenes in the toolkit file formats");
  synth_cmd->add_option("--scenes", synth_args.scenes, "number of scenes");
  synth_cmd->add_option("--noise", synth_args.noise,
                        "keypoint noise as a fraction of instance scale");
  synth_cmd->add_option("--conf-noise", synth_args.conf_noise,
                        "confidence jitter amplitude");
  synth_cmd->add_option("--regime", synth_args.regime,
                        "keypoint_driven or box_driven");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory");
  synth_cmd->add_option("--image-size", synth_args.image_size, "image side");
  synth_cmd->add_option("--kpts", synth_args.kpts, "keypoints per pose");
  synth_cmd->add_option("--min-instances", synth_args.min_instances,
                        "instances per scene, lower bound");
  synth_cmd->add_option("--max-instances", synth_args.max_instances,
                        "instances per scene, upper bound");
  synth_cmd->add_option("--pool-size", synth_args.pool_size,
                        "candidates per instance kept in pool.json");

  SweepArgs sweep_args;
  auto* sweep_cmd = synth_cmd->add_subcommand(
      "sweep", "TAE-vs-AP table across noise levels and confidence regimes");
  sweep_cmd->add_option("--scenes", sweep_args.scenes, "scenes per config");
  sweep_cmd->add_option("--noise-levels", sweep_args.noise_levels,
                        "pose-noise ladder")
      ->delimiter(',');
  sweep_cmd->add_option("--conf-noise-levels", sweep_args.conf_noise_levels,
                        "confidence jitter per level (default: noise/2)")
      ->delimiter(',');
  sweep_cmd->add_option("--out", sweep_args.out_dir,
                        "write sweep_table.tsv and sweep_points.tsv here");
  sweep_cmd->add_option("--image-size", sweep_args.image_size, "image side");

  app.require_subcommand(0, 1);

  if (argc <= 1) {
    std::cerr << app.help() << "\n";
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*oks_cmd) return run_oks(g, oks_args);
    if (*loss_cmd) return run_loss_check(g, loss_args);
    if (*assign_cmd) return run_assign(g, assign_args);
    if (*tae_cmd) return run_tae(g, tae_args);
    if (*nms_cmd) return run_nms(g, nms_args);
    if (*eval_cmd) return run_eval(g, eval_args);
    if (*synth_cmd) {
      if (*sweep_cmd) return run_sweep(g, sweep_args);
      return run_synth(g, synth_args);
    }
    std::cerr << app.help() << "\n";
    return 2;
  } catch (const posekit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
