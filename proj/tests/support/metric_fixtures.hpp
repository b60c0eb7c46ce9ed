// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

// Constructed evaluation fixtures with hand-computed metric values.

#pragma once

#include <cmath>
#include <vector>

#include "bodylink/metrics.hpp"

namespace bodylink::metric_fixtures {

inline GroundTruthObject gt(BBox b, ClassId c, std::optional<std::size_t> parent = std::nullopt) {
  return {b, c, parent, std::nullopt};
}

inline PredictedObject pred(BBox b, ClassId c, double score,
                            std::optional<std::size_t> link = std::nullopt) {
  return {b, c, score, link};
}

inline BBox shifted(const BBox& b, double dx) { return {b.x_l + dx, b.y_t, b.x_r + dx, b.y_b}; }

/// Two ground-truth hands, three predictions ranked TP, FP, TP.
/// Precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1; envelope 1, 2/3, 2/3;
/// AP = 1/2 * 1 + 1/2 * 2/3 = 5/6.
inline std::vector<EvalImage> ap_fixture(const ClassSchema& schema) {
  const ClassId body = schema.body_class(), hand = schema.find("hand");
  EvalImage img;
  img.truth.width = img.truth.height = 400;
  img.truth.objects = {gt({0, 0, 200, 400}, body), gt({20, 20, 60, 60}, hand, 0),
                       gt({120, 20, 160, 60}, hand, 0)};
  img.predictions = {pred({20, 20, 60, 60}, hand, 0.9), pred({300, 300, 340, 340}, hand, 0.8),
                     pred({122, 20, 162, 60}, hand, 0.7)};
  return {img};
}
inline constexpr double kApFixture = 5.0 / 6.0;

/// Four images with one hand each. Ranked detections (score, outcome):
/// .9 TP img0, .8 FP img1, .7 TP img2, .6 FP img3, .5 TP img3.
/// Staircase (FPPI, miss): (0, 1) (0, .75) (.25, .75) (.25, .5) (.5, .5) (.5, .25).
/// References 10^-2 .. 10^-0.75 see miss .75, 10^-0.5 sees .5, and
/// 10^-0.25, 10^0 see .25.
inline std::vector<EvalImage> miss_rate_fixture(const ClassSchema& schema) {
  const ClassId hand = schema.find("hand");
  const BBox h{100, 100, 140, 140};
  std::vector<EvalImage> imgs(4);
  for (auto& img : imgs) {
    img.truth.width = img.truth.height = 400;
    img.truth.objects = {gt(h, hand)};
  }
  imgs[0].predictions = {pred(h, hand, 0.9)};
  imgs[1].predictions = {pred(shifted(h, 200), hand, 0.8)};
  imgs[2].predictions = {pred(h, hand, 0.7)};
  imgs[3].predictions = {pred(shifted(h, 200), hand, 0.6), pred(h, hand, 0.5)};
  return imgs;
}
inline double miss_rate_fixture_value() {
  return std::exp((6.0 * std::log(0.75) + std::log(0.5) + 2.0 * std::log(0.25)) / 9.0);
}

/// Two bodies, three hands; hands ranked .9 right body, .8 wrong body,
/// .7 right body. Conditional accuracy 2/3. Joint flags T, F, T over 3 ground
/// truths: AP = 1/3 * 1 + 1/3 * 2/3 = 5/9.
inline std::vector<EvalImage> association_fixture(const ClassSchema& schema) {
  const ClassId body = schema.body_class(), hand = schema.find("hand");
  EvalImage img;
  img.truth.width = img.truth.height = 600;
  img.truth.objects = {gt({0, 0, 200, 500}, body),       gt({300, 0, 500, 500}, body),
                       gt({20, 200, 60, 240}, hand, 0),  gt({140, 200, 180, 240}, hand, 0),
                       gt({320, 200, 360, 240}, hand, 1)};
  img.predictions = {pred({0, 0, 200, 500}, body, 0.95), pred({300, 0, 500, 500}, body, 0.94),
                     pred({20, 200, 60, 240}, hand, 0.9, 0), pred({140, 200, 180, 240}, hand, 0.8, 1),
                     pred({320, 200, 360, 240}, hand, 0.7, 1)};
  return {img};
}
inline constexpr double kConditionalFixture = 2.0 / 3.0;
inline constexpr double kJointFixture = 5.0 / 9.0;
/// Pairs ranked correct, wrong, correct over 3 ground-truth pairs in one image.
/// Staircase (FPPI, miss): (0, 1) (0, 2/3) (1, 2/3) (1, 1/3). The first eight
/// references see 2/3 and 10^0 sees 1/3.
inline double miss_matching_fixture_value() {
  return std::exp((8.0 * std::log(2.0 / 3.0) + std::log(1.0 / 3.0)) / 9.0);
}

/// Perfect detections; `wrong` links every hand to the other body.
inline std::vector<EvalImage> pair_fixture(const ClassSchema& schema, bool wrong) {
  const ClassId body = schema.body_class(), hand = schema.find("hand");
  EvalImage img;
  img.truth.width = img.truth.height = 600;
  img.truth.objects = {gt({0, 0, 200, 500}, body), gt({300, 0, 500, 500}, body),
                       gt({20, 200, 60, 240}, hand, 0), gt({320, 200, 360, 240}, hand, 1)};
  img.predictions = {pred({0, 0, 200, 500}, body, 0.95), pred({300, 0, 500, 500}, body, 0.94),
                     pred({20, 200, 60, 240}, hand, 0.9, wrong ? 1u : 0u),
                     pred({320, 200, 360, 240}, hand, 0.8, wrong ? 0u : 1u)};
  return {img};
}

}  // namespace bodylink::metric_fixtures
