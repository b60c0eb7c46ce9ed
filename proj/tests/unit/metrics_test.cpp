// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "bodylink/metrics.hpp"
#include "metric_fixtures.hpp"
#include "oracles.hpp"

using namespace bodylink;
using namespace bodylink::metric_fixtures;

namespace {

const ClassSchema kSchema = ClassSchema::body_hands();
const ClassId kHand = kSchema.find("hand");

std::vector<EvalImage> single(BBox truth, std::optional<BBox> prediction) {
  EvalImage img;
  img.truth.width = img.truth.height = 200;
  img.truth.objects = {gt(truth, kHand)};
  if (prediction) img.predictions = {pred(*prediction, kHand, 0.8)};
  return {img};
}

}  // namespace

TEST(VocAp, SingleDetection) {
  EXPECT_EQ(voc_ap(single({0, 0, 10, 10}, BBox{0, 0, 10, 9}), kHand, 0.5, kSchema), 1.0);
  EXPECT_EQ(voc_ap(single({0, 0, 10, 10}, BBox{50, 50, 60, 60}), kHand, 0.5, kSchema), 0.0);
}

TEST(VocAp, HandFixture) {
  const auto imgs = ap_fixture(kSchema);
  const auto ap = voc_ap(imgs, kHand, 0.5, kSchema);
  ASSERT_TRUE(ap.has_value());
  EXPECT_NEAR(*ap, kApFixture, 1e-9);
  EXPECT_NEAR(*ap, oracle::ranked_ap({true, false, true}, 2), 1e-12);
}

TEST(VocAp, UndefinedWithoutGroundTruth) {
  EvalImage img;
  img.truth.width = img.truth.height = 100;
  img.predictions = {pred({0, 0, 10, 10}, kHand, 0.5)};
  const std::vector<EvalImage> imgs{img};
  EXPECT_FALSE(voc_ap(imgs, kHand, 0.5, kSchema).has_value());
}

// A correct extra detection never lowers AP; a duplicate never raises it.
TEST(VocAp, Monotonicity) {
  auto imgs = ap_fixture(kSchema);
  const double base = *voc_ap(imgs, kHand, 0.5, kSchema);
  auto dup = imgs;
  dup[0].predictions.push_back(pred({20, 20, 60, 60}, kHand, 0.85));
  EXPECT_LE(*voc_ap(dup, kHand, 0.5, kSchema), base);
  auto better = imgs;
  better[0].truth.objects.push_back(gt({220, 20, 260, 60}, kHand, 0));
  const double before = *voc_ap(better, kHand, 0.5, kSchema);
  better[0].predictions.push_back(pred({220, 20, 260, 60}, kHand, 0.6));
  EXPECT_GE(*voc_ap(better, kHand, 0.5, kSchema), before);
}

TEST(MissRate, TrivialEnds) {
  EXPECT_EQ(log_avg_miss_rate(single({0, 0, 10, 10}, BBox{0, 0, 10, 10}), kHand, kSchema), 0.0);
  EXPECT_EQ(log_avg_miss_rate(single({0, 0, 10, 10}, std::nullopt), kHand, kSchema), 1.0);
}

TEST(MissRate, StaircaseFixture) {
  const auto imgs = miss_rate_fixture(kSchema);
  const auto detail = log_avg_miss_rate_detail(imgs, kHand, kSchema);
  ASSERT_TRUE(detail.value.has_value());
  EXPECT_NEAR(*detail.value, miss_rate_fixture_value(), 1e-9);
  const std::vector<double> fppi{0, 0, 0.25, 0.25, 0.5, 0.5};
  const std::vector<double> miss{1, 0.75, 0.75, 0.5, 0.5, 0.25};
  ASSERT_EQ(detail.curve.fppi.size(), fppi.size());
  for (std::size_t i = 0; i < fppi.size(); ++i) {
    EXPECT_NEAR(detail.curve.fppi[i], fppi[i], 1e-12);
    EXPECT_NEAR(detail.curve.miss_rate[i], miss[i], 1e-12);
  }
}

// Image order does not matter.
TEST(MissRate, PermutationInvariant) {
  auto imgs = miss_rate_fixture(kSchema);
  const double a = *log_avg_miss_rate(imgs, kHand, kSchema);
  const double ap = *voc_ap(imgs, kHand, 0.5, kSchema);
  std::reverse(imgs.begin(), imgs.end());
  EXPECT_EQ(*log_avg_miss_rate(imgs, kHand, kSchema), a);
  EXPECT_EQ(*voc_ap(imgs, kHand, 0.5, kSchema), ap);
}

TEST(MissRate, ReferencePoints) {
  const auto r = fppi_reference_points();
  EXPECT_NEAR(r.front(), 0.01, 1e-15);
  EXPECT_NEAR(r.back(), 1.0, 1e-15);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i] / r[i - 1], std::pow(10.0, 0.25), 1e-12);
}

TEST(MissMatchingRate, PerfectAndAllWrong) {
  EXPECT_EQ(miss_matching_rate(pair_fixture(kSchema, false), kHand, kSchema), 0.0);
  EXPECT_EQ(miss_matching_rate(pair_fixture(kSchema, true), kHand, kSchema), 1.0);
}

TEST(MissMatchingRate, HandFixture) {
  const auto detail = miss_matching_rate_detail(association_fixture(kSchema), kHand, kSchema);
  ASSERT_TRUE(detail.value.has_value());
  EXPECT_NEAR(*detail.value, miss_matching_fixture_value(), 1e-9);
}

TEST(ConditionalJoint, PerfectAndAllWrong) {
  const auto ok = conditional_accuracy_and_joint_ap(pair_fixture(kSchema, false), kHand, kSchema);
  EXPECT_EQ(ok.conditional_accuracy, 1.0);
  EXPECT_EQ(ok.joint_ap, 1.0);
  const auto bad = conditional_accuracy_and_joint_ap(pair_fixture(kSchema, true), kHand, kSchema);
  EXPECT_EQ(bad.conditional_accuracy, 0.0);
  EXPECT_EQ(bad.joint_ap, 0.0);
}

TEST(ConditionalJoint, HandFixture) {
  const auto r = conditional_accuracy_and_joint_ap(association_fixture(kSchema), kHand, kSchema);
  ASSERT_TRUE(r.conditional_accuracy && r.joint_ap);
  EXPECT_NEAR(*r.conditional_accuracy, kConditionalFixture, 1e-9);
  EXPECT_NEAR(*r.joint_ap, kJointFixture, 1e-9);
  EXPECT_NEAR(*r.joint_ap, oracle::ranked_ap({true, false, true}, 3), 1e-12);
  EXPECT_EQ(r.true_positive_parts, 3u);
  EXPECT_EQ(r.correctly_linked, 2u);
}

TEST(ConditionalJoint, UndefinedWithoutTruePositives) {
  const auto r = conditional_accuracy_and_joint_ap(single({0, 0, 10, 10}, std::nullopt), kHand, kSchema);
  EXPECT_FALSE(r.conditional_accuracy.has_value());
  EXPECT_EQ(r.joint_ap, 0.0);
}

TEST(CocoSweep, PerfectPredictions) {
  for (const auto& c : coco_ap_sweep(pair_fixture(kSchema, false), kSchema)) {
    for (const auto& v : c.original.per_threshold) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(c.original.ap50_95, 1.0);
    EXPECT_EQ(c.subordinate.ap50_95, 1.0);
  }
}

// Hands are 40x40 (medium), bodies are large; the other bucket is undefined.
TEST(CocoSweep, SizeBuckets) {
  const auto sweep = coco_ap_sweep(pair_fixture(kSchema, false), kSchema);
  EXPECT_FALSE(sweep[0].original.ap_medium.has_value());
  EXPECT_EQ(sweep[0].original.ap_large, 1.0);
  EXPECT_EQ(sweep[1].original.ap_medium, 1.0);
  EXPECT_FALSE(sweep[1].original.ap_large.has_value());
}

// Each threshold equals a direct AP call, and subordinate never exceeds original.
TEST(CocoSweep, ComposesVocAp) {
  const auto imgs = association_fixture(kSchema);
  const auto sweep = coco_ap_sweep(imgs, kSchema);
  const auto thr = coco_iou_thresholds();
  for (const auto& c : sweep) {
    for (std::size_t i = 0; i < thr.size(); ++i) {
      EXPECT_EQ(c.original.per_threshold[i], voc_ap(imgs, c.cls, thr[i], kSchema));
      EXPECT_LE(*c.subordinate.per_threshold[i], *c.original.per_threshold[i]);
    }
  }
  EXPECT_NEAR(*sweep[1].subordinate.ap50, kJointFixture, 1e-9);
}

TEST(Evaluate, ReportFields) {
  const auto rep = evaluate(association_fixture(kSchema), kSchema);
  EXPECT_EQ(rep.num_images, 1u);
  ASSERT_EQ(rep.classes.size(), 2u);
  EXPECT_EQ(rep.classes[0].ap50, 1.0);
  EXPECT_FALSE(rep.classes[0].mmr2.has_value());
  EXPECT_EQ(rep.classes[1].num_gt, 3u);
  EXPECT_NEAR(*rep.conditional_accuracy, kConditionalFixture, 1e-12);
  EXPECT_NEAR(*rep.joint_ap, kJointFixture, 1e-12);
  EXPECT_TRUE(rep.classes[1].mmr2.has_value());
}
