#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "posekit/pose.hpp"

using namespace posekit;
using Catch::Matchers::WithinAbs;

namespace {

GroundTruthInstance simple_gt(Pose pose, double area) {
  return make_instance(1, std::move(pose), area);
}

}  // namespace

TEST_CASE("oks is 1 for a perfect prediction") {
  Pose gt_pose{{{10, 20, 2}, {30, 40, 1}, {50, 60, 2}}};
  auto gt = simple_gt(gt_pose, 400.0);
  Pose pred = gt_pose;
  REQUIRE(oks(pred, gt, SigmaTable::uniform(3)) == 1.0);
}

TEST_CASE("oks single keypoint at one normalized unit") {
  // d = s * k forces exp(-1/2).
  const double s = 20.0;
  SigmaTable sig = SigmaTable::uniform(1);  // k = 1
  Pose gt_pose{{{0, 0, 2}}};
  auto gt = simple_gt(gt_pose, s * s);
  Pose pred{{{s * sig.k[0], 0, 0}}};  // predicted visibility is ignored
  REQUIRE_THAT(oks(pred, gt, sig), WithinAbs(0.6065306597126334, 1e-12));
}

TEST_CASE("oks two keypoints, one exact and one at one unit") {
  const double s = 50.0;
  SigmaTable sig;
  sig.k = {0.5, 0.25};
  Pose gt_pose{{{0, 0, 2}, {100, 100, 2}}};
  auto gt = simple_gt(gt_pose, s * s);
  Pose pred{{{0, 0, 2}, {100 + s * sig.k[1], 100, 2}}};
  REQUIRE_THAT(oks(pred, gt, sig), WithinAbs(0.8032653298563167, 1e-12));
}

TEST_CASE("oks ignores invisible ground-truth keypoints") {
  testkit::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    Pose gt_pose = testkit::random_pose(rng, k, 100.0, 0.3);
    auto gt = simple_gt(gt_pose, rng.uniform(100.0, 10000.0));
    Pose pred = testkit::jitter_pose(rng, gt_pose, 5.0);
    SigmaTable sig = SigmaTable::uniform(k);
    const double base = oks(pred, gt, sig);

    // Appending an invisible keypoint anywhere must not change the value.
    Pose gt2 = gt_pose;
    gt2.keypoints.push_back({rng.uniform(0.0, 100.0), 0.0, 0});
    Pose pred2 = pred;
    pred2.keypoints.push_back({-50.0, 7.0, 2});
    SigmaTable sig2 = sig;
    sig2.k.push_back(0.2);
    auto gt2i = make_instance(2, gt2, gt.area);
    REQUIRE(oks(pred2, gt2i, sig2) == base);
  }
}

TEST_CASE("oks invariances under translation and uniform rescaling") {
  testkit::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(9);
    Pose gt_pose = testkit::random_pose(rng, k, 150.0, 0.2);
    const double area = rng.uniform(100.0, 40000.0);
    auto gt = simple_gt(gt_pose, area);
    Pose pred = testkit::jitter_pose(rng, gt_pose, 8.0);
    SigmaTable sig = SigmaTable::uniform(k);
    const double base = oks(pred, gt, sig);

    const double tx = rng.uniform(-500.0, 500.0);
    const double ty = rng.uniform(-500.0, 500.0);
    Pose gt_t = gt_pose, pred_t = pred;
    for (auto& kp : gt_t.keypoints) {
      kp.x += tx;
      kp.y += ty;
    }
    for (auto& kp : pred_t.keypoints) {
      kp.x += tx;
      kp.y += ty;
    }
    REQUIRE_THAT(oks(pred_t, make_instance(3, gt_t, area), sig),
                 WithinAbs(base, 1e-12));

    const double c = rng.uniform(0.5, 3.0);
    Pose gt_s = gt_pose, pred_s = pred;
    for (auto& kp : gt_s.keypoints) {
      kp.x *= c;
      kp.y *= c;
    }
    for (auto& kp : pred_s.keypoints) {
      kp.x *= c;
      kp.y *= c;
    }
    REQUIRE_THAT(oks(pred_s, make_instance(4, gt_s, area * c * c), sig),
                 WithinAbs(base, 1e-12));
  }
}

TEST_CASE("oks is 1 only for exact visible keypoints") {
  testkit::Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.below(6);
    Pose gt_pose = testkit::random_pose(rng, k, 100.0, 0.2);
    auto gt = simple_gt(gt_pose, rng.uniform(400.0, 10000.0));
    SigmaTable sig = SigmaTable::uniform(k);
    Pose pred = gt_pose;
    // Displace one visible keypoint a honest nonzero amount.
    std::size_t target = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (gt_pose.keypoints[i].v > 0) target = i;
    pred.keypoints[target].x += rng.uniform(0.01, 5.0);
    REQUIRE(oks(pred, gt, sig) < 1.0);
  }
}

TEST_CASE("oks decreases as any visible keypoint moves away") {
  testkit::Rng rng(13);
  Pose gt_pose = testkit::random_pose(rng, 5);
  auto gt = simple_gt(gt_pose, 900.0);
  SigmaTable sig = SigmaTable::uniform(5);
  Pose pred = gt_pose;
  double prev = oks(pred, gt, sig);
  for (int step = 1; step <= 10; ++step) {
    pred.keypoints[2].x += 3.0;
    const double cur = oks(pred, gt, sig);
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("normalized_errors match the oks kernel when recombined") {
  testkit::Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.below(17);
    Pose gt_pose = testkit::random_pose(rng, k, 300.0, 0.25);
    auto gt = simple_gt(gt_pose, rng.uniform(400.0, 90000.0));
    Pose pred = testkit::jitter_pose(rng, gt_pose, 0.1 * gt.scale);
    SigmaTable sig = SigmaTable::uniform(k);
    const auto u = normalized_errors(pred, gt, sig);
    double sum = 0.0;
    std::size_t visible = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (gt_pose.keypoints[i].v <= 0) continue;
      sum += std::exp(-0.5 * u[i] * u[i]);
      ++visible;
    }
    REQUIRE_THAT(oks(pred, gt, sig),
                 WithinAbs(sum / static_cast<double>(visible), 1e-12));
  }
}

TEST_CASE("normalized_errors worked examples") {
  SigmaTable sig;
  sig.k = {0.1};
  Pose gt_pose{{{0, 0, 2}}};
  auto gt = simple_gt(gt_pose, 100.0);  // s = 10
  REQUIRE_THAT(normalized_errors(Pose{{{1, 0, 2}}}, gt, sig)[0],
               WithinAbs(1.0, 1e-12));
  REQUIRE(normalized_errors(gt_pose, gt, sig)[0] == 0.0);

  SigmaTable sig17;
  sig17.k = {1.0 / 17.0};
  auto gt2 = make_instance(2, Pose{{{0, 0, 2}}}, 10000.0);  // s = 100
  REQUIRE_THAT(normalized_errors(Pose{{{2, 0, 2}}}, gt2, sig17)[0],
               WithinAbs(0.34, 1e-12));

  // Errors cover every index, including invisible keypoints.
  SigmaTable sig2 = SigmaTable::uniform(2);
  Pose gt_mixed{{{0, 0, 2}, {10, 0, 0}}};
  auto gt3 = make_instance(3, gt_mixed, 4.0);  // s = 2, k = 0.5
  const auto u = normalized_errors(Pose{{{0, 0, 2}, {12, 0, 2}}}, gt3, sig2);
  REQUIRE(u.size() == 2);
  REQUIRE_THAT(u[1], WithinAbs(2.0, 1e-12));
}

TEST_CASE("oks error paths") {
  SigmaTable sig = SigmaTable::uniform(2);
  Pose gt_pose{{{0, 0, 0}, {1, 1, 0}}};
  auto gt = simple_gt(gt_pose, 100.0);
  Pose pred{{{0, 0, 2}, {1, 1, 2}}};
  REQUIRE_THROWS_AS(oks(pred, gt, sig), NoVisibleKeypoints);
  Pose short_pred{{{0, 0, 2}}};
  REQUIRE_THROWS_AS(oks(short_pred, gt, sig), DimensionMismatch);
  REQUIRE_THROWS_AS(normalized_errors(short_pred, gt, sig),
                    DimensionMismatch);

  GroundTruthInstance zero_scale = gt;
  zero_scale.scale = 0.0;
  REQUIRE_THROWS_AS(normalized_errors(pred, zero_scale, sig),
                    DegenerateScale);
}

TEST_CASE("visibility 1 and 2 gate identically") {
  SigmaTable sig = SigmaTable::uniform(2);
  Pose low{{{0, 0, 1}, {10, 10, 1}}};
  Pose high{{{0, 0, 2}, {10, 10, 2}}};
  Pose pred{{{1, 0, 2}, {11, 10, 2}}};
  REQUIRE(oks(pred, make_instance(1, low, 400.0), sig) ==
          oks(pred, make_instance(2, high, 400.0), sig));
}

TEST_CASE("instance construction enforces area and scale coupling") {
  Pose pose{{{0, 0, 2}}};
  REQUIRE_THROWS_AS(make_instance(1, pose, 0.0), InvalidArgument);
  REQUIRE_THROWS_AS(make_instance(1, pose, -4.0), InvalidArgument);
  auto gt = make_instance(1, pose, 12345.6789);
  REQUIRE_THAT(gt.scale * gt.scale, WithinAbs(gt.area, 1e-9 * gt.area));
  Pose bad{{{std::nan(""), 0, 2}}};
  REQUIRE_THROWS_AS(make_instance(1, bad, 4.0), InvalidArgument);
  Pose bad_v{{{0, 0, 5}}};
  REQUIRE_THROWS_AS(make_instance(1, bad_v, 4.0), InvalidArgument);
}

TEST_CASE("sigma presets") {
  const auto coco = SigmaTable::coco17();
  REQUIRE(coco.size() == 17);
  // Nose entry: 2 * 0.026.
  REQUIRE_THAT(coco.k[0], WithinAbs(0.052, 1e-15));
  REQUIRE_THAT(coco.k[16], WithinAbs(0.178, 1e-15));

  const auto crowd = SigmaTable::crowdpose14();
  REQUIRE(crowd.size() == 14);
  REQUIRE_THAT(crowd.k[0], WithinAbs(0.158, 1e-15));

  const auto uni = SigmaTable::uniform(5);
  REQUIRE(uni.size() == 5);
  REQUIRE_THAT(uni.k[2], WithinAbs(0.2, 1e-15));

  REQUIRE(sigma_preset("coco17").has_value());
  REQUIRE(sigma_preset("uniform(8)")->size() == 8);
  REQUIRE(sigma_preset("uniform", 14)->size() == 14);
  REQUIRE_FALSE(sigma_preset("unknown").has_value());
  REQUIRE_THROWS_AS(sigma_preset("uniform(0)"), InvalidArgument);
  REQUIRE_THROWS_AS(sigma_preset("uniform(x)"), InvalidArgument);
}

TEST_CASE("tight_bbox") {
  Pose pose{{{10, 5, 2}, {4, 20, 0}, {7, 7, 2}}};
  const auto box = tight_bbox(pose);
  REQUIRE(box[0] == 4.0);
  REQUIRE(box[1] == 5.0);
  REQUIRE(box[2] == 6.0);
  REQUIRE(box[3] == 15.0);
}
