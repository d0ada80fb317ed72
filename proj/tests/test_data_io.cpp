#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "helpers.hpp"
#include "posekit/data_io.hpp"
#include "posekit/synth.hpp"

using namespace posekit;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("posekit_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kMinimalDataset = R"({
  "images": [{"id": 1, "width": 640, "height": 480}],
  "annotations": [{
    "id": 10, "image_id": 1, "category_id": 1,
    "keypoints": [100.0, 120.5, 2, 130.0, 150.0, 1],
    "area": 2500.0, "bbox": [90.0, 110.0, 60.0, 70.0],
    "num_keypoints": 2
  }],
  "categories": [{
    "id": 1, "name": "person", "keypoints": ["a", "b"],
    "skeleton": [[1, 2]]
  }]
})";

}  // namespace

TEST_CASE("load_dataset minimal file") {
  TempDir dir;
  write_text(dir.file("ds.json"), kMinimalDataset);
  const Dataset ds = load_dataset(dir.file("ds.json"));
  REQUIRE(ds.images.size() == 1);
  REQUIRE(ds.annotations.size() == 1);
  REQUIRE(ds.num_keypoints() == 2);
  REQUIRE(ds.annotations[0].usable);
  REQUIRE(ds.annotations[0].bbox.has_value());
  const Pose pose = annotation_pose(ds.annotations[0]);
  REQUIRE(pose.keypoints[0].x == 100.0);
  REQUIRE(pose.keypoints[1].v == 1);
}

TEST_CASE("load_dataset schema errors name the offender") {
  TempDir dir;
  write_text(dir.file("bad_len.json"), R"({
    "images": [{"id": 1}],
    "annotations": [{"id": 77, "image_id": 1,
                     "keypoints": [1.0, 2.0, 2, 3.0], "area": 100.0}],
    "categories": [{"id": 1, "name": "person", "keypoints": ["a", "b"]}]
  })");
  try {
    load_dataset(dir.file("bad_len.json"));
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    REQUIRE(std::string(e.what()).find("77") != std::string::npos);
  }

  write_text(dir.file("bad_img.json"), R"({
    "images": [{"id": 1}],
    "annotations": [{"id": 5, "image_id": 99,
                     "keypoints": [1.0, 2.0, 2], "area": 100.0}]
  })");
  REQUIRE_THROWS_AS(load_dataset(dir.file("bad_img.json")), SchemaError);

  write_text(dir.file("not_json.json"), "{nope");
  REQUIRE_THROWS_AS(load_dataset(dir.file("not_json.json")), ParseError);
  REQUIRE_THROWS_AS(load_dataset(dir.file("missing.json")), ParseError);
}

TEST_CASE("unlabeled annotations are retained but unusable") {
  TempDir dir;
  write_text(dir.file("ds.json"), R"({
    "images": [{"id": 1}],
    "annotations": [{"id": 2, "image_id": 1,
                     "keypoints": [0.0, 0.0, 0, 0.0, 0.0, 0],
                     "area": 0.0, "num_keypoints": 0}],
    "categories": [{"id": 1, "name": "person", "keypoints": ["a", "b"]}]
  })");
  const Dataset ds = load_dataset(dir.file("ds.json"));
  REQUIRE(ds.annotations.size() == 1);
  REQUIRE_FALSE(ds.annotations[0].usable);
  const auto gt = dataset_to_ground_truth(ds);
  REQUIRE(gt.size() == 1);
  REQUIRE(gt[0].gts.empty());
}

TEST_CASE("unknown extra fields are ignored on load") {
  TempDir dir;
  write_text(dir.file("ds.json"), R"({
    "info": {"year": 2017, "version": "1.0"},
    "licenses": [{"id": 1}],
    "images": [{"id": 1, "width": 64, "height": 64, "file_name": "x.jpg"}],
    "annotations": [{"id": 3, "image_id": 1, "iscrowd": 0, "segmentation": [],
                     "keypoints": [1.0, 2.0, 2], "area": 25.0,
                     "custom_field": true}],
    "categories": [{"id": 1, "name": "person", "supercategory": "person",
                    "keypoints": ["a"]}]
  })");
  const Dataset ds = load_dataset(dir.file("ds.json"));
  REQUIRE(ds.annotations.size() == 1);
  REQUIRE(ds.annotations[0].usable);
}

TEST_CASE("dataset round-trip is structurally identical") {
  TempDir dir;
  write_text(dir.file("ds.json"), kMinimalDataset);
  const Dataset first = load_dataset(dir.file("ds.json"));
  save_dataset(first, dir.file("copy.json"));
  const Dataset second = load_dataset(dir.file("copy.json"));
  REQUIRE(first == second);
  save_dataset(second, dir.file("copy2.json"));
  const Dataset third = load_dataset(dir.file("copy2.json"));
  REQUIRE(second == third);
}

TEST_CASE("results round-trip preserves scores exactly") {
  TempDir dir;
  ResultSet rs;
  testkit::Rng rng(71);
  for (int i = 0; i < 50; ++i) {
    ResultEntry e;
    e.image_id = i % 7;
    e.category_id = 1;
    for (int k = 0; k < 4; ++k) {
      e.keypoints.push_back(rng.uniform(0.0, 640.0));
      e.keypoints.push_back(rng.uniform(0.0, 480.0));
      e.keypoints.push_back(rng.uniform());
    }
    e.score = rng.uniform();
    rs.push_back(std::move(e));
  }
  save_results(rs, dir.file("res.json"));
  const ResultSet loaded = load_results(dir.file("res.json"));
  REQUIRE(loaded == rs);  // bit-exact, including scores

  save_results({}, dir.file("empty.json"));
  REQUIRE(load_results(dir.file("empty.json")).empty());
}

TEST_CASE("results with bad schema fail loudly") {
  TempDir dir;
  write_text(dir.file("bad.json"), R"([{"image_id": 1, "score": 0.5}])");
  REQUIRE_THROWS_AS(load_results(dir.file("bad.json")), SchemaError);
  write_text(dir.file("obj.json"), R"({"image_id": 1})");
  REQUIRE_THROWS_AS(load_results(dir.file("obj.json")), SchemaError);
}

TEST_CASE("candidate files round-trip and validate") {
  TempDir dir;
  SynthConfig cfg;
  cfg.seed = 4;
  cfg.image_size = 64.0;
  const Scene scene = generate_scene(cfg, 0);
  std::map<std::int64_t, std::vector<GridCandidate>> cands;
  cands[scene.image_id] = scene.cands;

  save_candidates(cands, dir.file("c.txt"));
  const auto loaded = load_candidates(dir.file("c.txt"));
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded.at(scene.image_id) == scene.cands);

  // Re-saving the loaded structure is byte-identical.
  save_candidates(loaded, dir.file("c2.txt"));
  std::ifstream a(dir.file("c.txt")), b(dir.file("c2.txt"));
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  REQUIRE(sa == sb);
}

TEST_CASE("candidate loader rejects malformed lines") {
  TempDir dir;
  write_text(dir.file("bad_level.txt"), "1 P9 0 0 0.5 1.0 2.0 0.9\n");
  REQUIRE_THROWS_AS(load_candidates(dir.file("bad_level.txt")), SchemaError);
  write_text(dir.file("bad_len.txt"), "1 P3 0 0 0.5 1.0 2.0\n");
  REQUIRE_THROWS_AS(load_candidates(dir.file("bad_len.txt")), SchemaError);
  write_text(dir.file("bad_conf.txt"), "1 P3 0 0 1.5 1.0 2.0 0.9\n");
  REQUIRE_THROWS_AS(load_candidates(dir.file("bad_conf.txt")), SchemaError);
  write_text(dir.file("bad_tok.txt"), "1 P3 zero 0 0.5 1.0 2.0 0.9\n");
  REQUIRE_THROWS_AS(load_candidates(dir.file("bad_tok.txt")), ParseError);
  write_text(dir.file("mixed_k.txt"),
             "1 P3 0 0 0.5 1.0 2.0 0.9\n1 P3 0 1 0.5 1.0 2.0 0.9 3.0 4.0 0.8\n");
  REQUIRE_THROWS_AS(load_candidates(dir.file("mixed_k.txt")), SchemaError);
  // Comments and blank lines are fine.
  write_text(dir.file("ok.txt"), "# header\n\n1 P4 2 3 0.25 1.5 2.5 0.75\n");
  const auto ok = load_candidates(dir.file("ok.txt"));
  REQUIRE(ok.at(1).size() == 1);
  REQUIRE(ok.at(1)[0].stride == 16);
}

TEST_CASE("loaders are total: mutated inputs fail structurally, never crash") {
  TempDir dir;
  testkit::Rng rng(72);

  // Seed files: a valid dataset and a valid candidates dump.
  write_text(dir.file("ds.json"), kMinimalDataset);
  SynthConfig cfg;
  cfg.seed = 8;
  cfg.image_size = 64.0;
  const Scene scene = generate_scene(cfg, 0);
  std::map<std::int64_t, std::vector<GridCandidate>> cands;
  cands[scene.image_id] = scene.cands;
  save_candidates(cands, dir.file("c.txt"));

  const auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  const std::string ds_bytes = read_bytes(dir.file("ds.json"));
  const std::string cand_bytes = read_bytes(dir.file("c.txt"));

  const auto mutate = [&](std::string bytes) {
    const std::size_t edits = 1 + rng.below(4);
    for (std::size_t e = 0; e < edits; ++e) {
      if (bytes.empty()) break;
      const std::size_t pos = rng.below(bytes.size());
      switch (rng.below(3)) {
        case 0: bytes[pos] = static_cast<char>(rng.below(256)); break;
        case 1: bytes.erase(pos, 1 + rng.below(8)); break;
        default:
          bytes.insert(pos, std::string(1 + rng.below(4),
                                        static_cast<char>(rng.below(256))));
      }
    }
    return bytes;
  };

  int ds_errors = 0, cand_errors = 0;
  for (int trial = 0; trial < 200; ++trial) {
    write_text(dir.file("ds_mut.json"), mutate(ds_bytes));
    try {
      (void)load_dataset(dir.file("ds_mut.json"));
    } catch (const Error&) {
      ++ds_errors;  // structured failure is the only acceptable failure
    }
    write_text(dir.file("c_mut.txt"), mutate(cand_bytes));
    try {
      (void)load_candidates(dir.file("c_mut.txt"));
    } catch (const Error&) {
      ++cand_errors;
    }
  }
  // Most mutations must be rejected; none may escape the error taxonomy.
  REQUIRE(ds_errors > 100);
  REQUIRE(cand_errors > 50);
}

TEST_CASE("detections skip nothing when converting results") {
  ResultSet rs = {{3, 1, {1.0, 2.0, 0.8}, 0.9}};
  const auto dets = results_to_detections(rs);
  REQUIRE(dets.size() == 1);
  REQUIRE(dets[0].image_id == 3);
  REQUIRE(dets[0].pose.keypoints[0].v == 2);
  REQUIRE(dets[0].score == 0.9);
}
