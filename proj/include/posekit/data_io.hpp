#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "posekit/assignment.hpp"
#include "posekit/detail/format.hpp"
#include "posekit/errors.hpp"
#include "posekit/evaluation.hpp"
#include "posekit/pose.hpp"

namespace posekit {

struct ImageInfo {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;

  bool operator==(const ImageInfo&) const = default;
};

// One COCO-style keypoint annotation. `keypoints` stays in its flat
// (x, y, v) * K layout so files round-trip exactly; `usable` marks
// annotations that can feed similarity math (some labeled keypoint and a
// positive area).
struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::vector<double> keypoints;
  double area = 0.0;
  std::optional<std::array<double, 4>> bbox;
  int num_keypoints = 0;
  bool usable = true;

  bool operator==(const Annotation&) const = default;
};

struct CategoryInfo {
  std::int64_t id = 1;
  std::string name = "person";
  std::vector<std::string> keypoint_names;
  std::vector<std::array<int, 2>> skeleton;

  bool operator==(const CategoryInfo&) const = default;
};

struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  CategoryInfo category;

  std::size_t num_keypoints() const { return category.keypoint_names.size(); }

  bool operator==(const Dataset&) const = default;
};

struct ResultEntry {
  std::int64_t image_id = 0;
  int category_id = 1;
  std::vector<double> keypoints;
  double score = 0.0;

  bool operator==(const ResultEntry&) const = default;
};

using ResultSet = std::vector<ResultEntry>;

inline Pose flat_to_pose(const std::vector<double>& flat) {
  Pose pose;
  pose.keypoints.resize(flat.size() / 3);
  for (std::size_t i = 0; i < pose.keypoints.size(); ++i) {
    pose.keypoints[i].x = flat[3 * i];
    pose.keypoints[i].y = flat[3 * i + 1];
    pose.keypoints[i].v = static_cast<int>(flat[3 * i + 2]);
  }
  return pose;
}

inline Pose annotation_pose(const Annotation& ann) {
  return flat_to_pose(ann.keypoints);
}

// Results carry a per-keypoint score in the v slot rather than a
// visibility flag; every predicted keypoint is treated as labeled.
inline Pose result_pose(const ResultEntry& r) {
  Pose pose;
  pose.keypoints.resize(r.keypoints.size() / 3);
  for (std::size_t i = 0; i < pose.keypoints.size(); ++i) {
    pose.keypoints[i].x = r.keypoints[3 * i];
    pose.keypoints[i].y = r.keypoints[3 * i + 1];
    pose.keypoints[i].v = 2;
  }
  return pose;
}

namespace detail {

using nlohmann::json;

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return doc;
}

template <typename T>
T require(const json& obj, const char* field, const std::string& where) {
  const auto it = obj.find(field);
  if (it == obj.end())
    throw SchemaError(where + ": missing required field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + ": field '" + field + "': " + e.what());
  }
}

}  // namespace detail

// Loads a COCO keypoint annotation document. Annotations with
// num_keypoints = 0 are retained but flagged unusable; unknown extra fields
// are ignored.
inline Dataset load_dataset(const std::filesystem::path& path) {
  using detail::require;
  const auto doc = detail::parse_file(path);
  if (!doc.is_object()) throw SchemaError(path.string() + ": not an object");
  Dataset ds;

  for (const auto& img : require<nlohmann::json>(doc, "images", path.string())) {
    ImageInfo info;
    info.id = require<std::int64_t>(img, "id", "image");
    info.width = img.value("width", 0);
    info.height = img.value("height", 0);
    ds.images.push_back(info);
  }

  std::size_t expected_k = 0;
  if (doc.contains("categories") && !doc["categories"].empty()) {
    const auto& cat = doc["categories"][0];
    ds.category.id = cat.value("id", std::int64_t{1});
    ds.category.name = cat.value("name", std::string("person"));
    if (cat.contains("keypoints"))
      ds.category.keypoint_names =
          cat["keypoints"].get<std::vector<std::string>>();
    if (cat.contains("skeleton"))
      for (const auto& edge : cat["skeleton"])
        ds.category.skeleton.push_back(
            {edge.at(0).get<int>(), edge.at(1).get<int>()});
    expected_k = ds.category.keypoint_names.size();
  }

  std::map<std::int64_t, char> image_ids;
  for (const auto& img : ds.images) {
    if (image_ids.count(img.id))
      throw SchemaError(path.string() + ": duplicate image id " +
                        std::to_string(img.id));
    image_ids[img.id] = 1;
  }

  for (const auto& a : require<nlohmann::json>(doc, "annotations", path.string())) {
    Annotation ann;
    ann.id = require<std::int64_t>(a, "id", "annotation");
    const std::string where = "annotation " + std::to_string(ann.id);
    ann.image_id = require<std::int64_t>(a, "image_id", where);
    if (!image_ids.count(ann.image_id))
      throw SchemaError(where + ": references unknown image " +
                        std::to_string(ann.image_id));
    ann.keypoints = require<std::vector<double>>(a, "keypoints", where);
    if (ann.keypoints.size() % 3 != 0 ||
        (expected_k != 0 && ann.keypoints.size() != 3 * expected_k))
      throw SchemaError(where + ": keypoints length " +
                        std::to_string(ann.keypoints.size()) +
                        " is not 3*K");
    if (expected_k == 0) expected_k = ann.keypoints.size() / 3;
    ann.area = require<double>(a, "area", where);
    if (a.contains("bbox")) {
      const auto b = a["bbox"].get<std::vector<double>>();
      if (b.size() != 4) throw SchemaError(where + ": bbox needs 4 values");
      ann.bbox = {b[0], b[1], b[2], b[3]};
    }
    if (a.contains("num_keypoints")) {
      ann.num_keypoints = a["num_keypoints"].get<int>();
    } else {
      int n = 0;
      for (std::size_t i = 2; i < ann.keypoints.size(); i += 3)
        if (ann.keypoints[i] > 0) ++n;
      ann.num_keypoints = n;
    }
    ann.usable = ann.num_keypoints > 0;
    if (ann.usable && !(ann.area > 0.0 && std::isfinite(ann.area)))
      throw SchemaError(where + ": area must be positive");
    ds.annotations.push_back(std::move(ann));
  }

  if (ds.category.keypoint_names.empty()) {
    for (std::size_t i = 0; i < expected_k; ++i)
      ds.category.keypoint_names.push_back("kp_" + std::to_string(i));
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["images"] = nlohmann::json::array();
  for (const auto& img : ds.images)
    doc["images"].push_back(
        {{"id", img.id}, {"width", img.width}, {"height", img.height}});
  doc["annotations"] = nlohmann::json::array();
  for (const auto& ann : ds.annotations) {
    nlohmann::json a = {{"id", ann.id},
                        {"image_id", ann.image_id},
                        {"category_id", ds.category.id},
                        {"keypoints", ann.keypoints},
                        {"area", ann.area},
                        {"num_keypoints", ann.num_keypoints},
                        {"iscrowd", 0}};
    if (ann.bbox)
      a["bbox"] = std::vector<double>{(*ann.bbox)[0], (*ann.bbox)[1],
                                      (*ann.bbox)[2], (*ann.bbox)[3]};
    doc["annotations"].push_back(std::move(a));
  }
  doc["categories"] = nlohmann::json::array();
  nlohmann::json cat = {{"id", ds.category.id},
                        {"name", ds.category.name},
                        {"supercategory", "person"},
                        {"keypoints", ds.category.keypoint_names}};
  cat["skeleton"] = nlohmann::json::array();
  for (const auto& e : ds.category.skeleton)
    cat["skeleton"].push_back({e[0], e[1]});
  doc["categories"].push_back(std::move(cat));
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << doc.dump(1) << "\n";
}

inline ResultSet load_results(const std::filesystem::path& path) {
  using detail::require;
  const auto doc = detail::parse_file(path);
  if (!doc.is_array())
    throw SchemaError(path.string() + ": results must be a JSON array");
  ResultSet rs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "result " + std::to_string(i);
    const auto& r = doc[i];
    ResultEntry entry;
    entry.image_id = require<std::int64_t>(r, "image_id", where);
    entry.category_id = r.value("category_id", 1);
    entry.keypoints = require<std::vector<double>>(r, "keypoints", where);
    if (entry.keypoints.size() % 3 != 0 || entry.keypoints.empty())
      throw SchemaError(where + ": keypoints length is not 3*K");
    entry.score = require<double>(r, "score", where);
    if (!std::isfinite(entry.score))
      throw SchemaError(where + ": score must be finite");
    rs.push_back(std::move(entry));
  }
  return rs;
}

inline void save_results(const ResultSet& rs,
                         const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rs)
    doc.push_back({{"image_id", r.image_id},
                   {"category_id", r.category_id},
                   {"keypoints", r.keypoints},
                   {"score", r.score}});
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << doc.dump(1) << "\n";
}

// Candidate dumps are line-delimited so dense stride-8 grids stream and
// append naturally. One candidate per line:
//
//   image_id level row col conf x y vis_prob [* K]
//
// with level in {P3, P4, P5}; '#' lines and blank lines are skipped.
inline std::map<std::int64_t, std::vector<GridCandidate>> load_candidates(
    const std::filesystem::path& path, std::size_t expected_k = 0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::map<std::int64_t, std::vector<GridCandidate>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::int64_t image_id = 0;
    std::string level_token;
    int row = 0, col = 0;
    double conf = 0.0;
    if (!(ss >> image_id >> level_token >> row >> col >> conf))
      throw ParseError(where + ": malformed candidate header");
    const auto level = level_from_string(level_token);
    if (!level)
      throw SchemaError(where + ": unknown pyramid level '" + level_token +
                        "'");
    std::vector<double> rest;
    double value = 0.0;
    while (ss >> value) rest.push_back(value);
    if (!ss.eof()) throw ParseError(where + ": non-numeric keypoint data");
    if (rest.size() % 3 != 0 || rest.empty())
      throw SchemaError(where + ": keypoint data length is not 3*K");
    const std::size_t k = rest.size() / 3;
    if (expected_k != 0 && k != expected_k)
      throw SchemaError(where + ": expected " + std::to_string(expected_k) +
                        " keypoints, got " + std::to_string(k));
    if (expected_k == 0) expected_k = k;
    Pose pose;
    pose.keypoints.resize(k);
    std::vector<double> vis(k);
    for (std::size_t i = 0; i < k; ++i) {
      pose.keypoints[i] = {rest[3 * i], rest[3 * i + 1], 2};
      vis[i] = rest[3 * i + 2];
    }
    try {
      out[image_id].push_back(
          make_candidate(*level, row, col, conf, std::move(pose), std::move(vis)));
    } catch (const Error& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

inline void save_candidates(
    const std::map<std::int64_t, std::vector<GridCandidate>>& cands,
    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& [image_id, list] : cands) {
    for (const auto& c : list) {
      out << image_id << ' ' << to_string(c.level) << ' ' << c.row << ' '
          << c.col << ' ' << detail::format_double(c.conf);
      for (std::size_t i = 0; i < c.pose.size(); ++i)
        out << ' ' << detail::format_double(c.pose.keypoints[i].x) << ' '
            << detail::format_double(c.pose.keypoints[i].y) << ' '
            << detail::format_double(c.vis_probs[i]);
      out << '\n';
    }
  }
}

// Ground-truth view for the evaluator: usable annotations become instances,
// unusable ones are dropped here (they are excluded from matching and from
// the ground-truth count).
inline std::vector<ImageAnnotations> dataset_to_ground_truth(
    const Dataset& ds) {
  std::map<std::int64_t, std::vector<GroundTruthInstance>> per_image;
  for (const auto& img : ds.images) per_image[img.id];
  for (const auto& ann : ds.annotations) {
    if (!ann.usable) continue;
    std::optional<std::array<double, 4>> bbox = ann.bbox;
    per_image[ann.image_id].push_back(
        make_instance(ann.id, annotation_pose(ann), ann.area, bbox));
  }
  std::vector<ImageAnnotations> out;
  out.reserve(per_image.size());
  for (auto& [id, gts] : per_image) out.push_back({id, std::move(gts)});
  return out;
}

inline std::vector<Detection> results_to_detections(const ResultSet& rs) {
  std::vector<Detection> dets;
  dets.reserve(rs.size());
  for (const auto& r : rs)
    dets.push_back({r.image_id, result_pose(r), r.score, std::nullopt});
  return dets;
}

}  // namespace posekit
