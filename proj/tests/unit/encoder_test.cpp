// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "bodylink/encoder.hpp"
#include "bodylink/errors.hpp"
#include "bodylink/random.hpp"
#include "fixtures.hpp"

using namespace bodylink;

namespace {

const FeatureLevel kL8{8, 128, 128, {}};

SceneAnnotation body_and_hand() {
  const auto schema = ClassSchema::body_hands();
  SceneAnnotation s;
  s.width = 64;
  s.height = 64;
  s.objects.push_back({{0, 0, 64, 64}, schema.body_class(), std::nullopt, std::nullopt});
  s.objects.push_back({{16, 16, 32, 32}, schema.find("hand"), 0, std::nullopt});
  return s;
}

}  // namespace

TEST(EncodeBoxOffsets, FlooredCorners) {
  using A = std::array<double, 4>;
  EXPECT_EQ(encode_box_offsets({16, 16, 48, 48}, {3, 4}, kL8), (A{1, 2, 3, 2}));
  EXPECT_EQ(encode_box_offsets({16, 16, 48, 48}, {2, 2}, kL8), (A{0, 0, 4, 4}));
  const FeatureLevel l32{32, 32, 32, {}};
  EXPECT_EQ(encode_box_offsets({0, 0, 1024, 1024}, {16, 16}, l32), (A{16, 16, 16, 16}));
}

// Cells outside the floored box are rejected.
TEST(EncodeBoxOffsets, OutsideCellThrows) {
  EXPECT_THROW(encode_box_offsets({16, 16, 48, 48}, {1, 4}, kL8), std::invalid_argument);
  EXPECT_THROW(encode_box_offsets({16, 16, 48, 48}, {3, 7}, kL8), std::invalid_argument);
}

TEST(EncodeAssocOffset, ScaledCellDistance) {
  using A = std::array<double, 2>;
  EXPECT_EQ(encode_assoc_offset({40, 40}, {3, 4}, kL8, 2.0), (A{1.0, 0.5}));
  EXPECT_EQ(encode_assoc_offset({44, 47}, {5, 5}, kL8, 2.0), (A{0.0, 0.0}));
  EXPECT_THROW(encode_assoc_offset({0, 0}, {0, 0}, kL8, 0.0), std::invalid_argument);
}

TEST(EncodeScene, EmptySceneIsBackground) {
  SceneAnnotation s;
  s.width = 64;
  s.height = 64;
  const int strides[] = {8, 16};
  const auto levels = make_levels(64, 64, strides);
  const auto t = encode_scene(s, levels, 2.0, ClassSchema::body_hands());
  ASSERT_EQ(t.levels.size(), 2u);
  for (const auto& lt : t.levels) {
    EXPECT_TRUE(lt.candidate_mask.empty());
    for (int c : lt.class_target) EXPECT_EQ(c, 0);
    for (auto p : lt.primary_object) EXPECT_EQ(p, -1);
  }
}

// Every hand cell points at floor(32 / 8) = (4, 4); checked cell by cell.
TEST(EncodeScene, HandCellsPointAtBodyCenter) {
  const auto schema = ClassSchema::body_hands();
  const int strides[] = {8};
  const auto levels = make_levels(64, 64, strides);
  const auto t = encode_scene(body_and_hand(), levels, 2.0, schema);
  const auto& lt = t.levels[0];
  int hand_cells = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const auto ci = lt.level.cell_index({x, y});
      const bool inside = x >= 2 && x <= 4 && y >= 2 && y <= 4;
      EXPECT_EQ(lt.candidate(ci, 1), inside);
      EXPECT_TRUE(lt.candidate(ci, 0));  // the body covers the whole image
      if (!inside) continue;
      ++hand_cells;
      EXPECT_EQ(lt.primary_object[ci], 1);
      EXPECT_EQ(lt.body_center[ci], (Cell{4, 4}));
      EXPECT_EQ(x + 2.0 * lt.assoc_offsets[ci][0], 4.0);
      EXPECT_EQ(y + 2.0 * lt.assoc_offsets[ci][1], 4.0);
    }
  }
  EXPECT_EQ(hand_cells, 9);
  EXPECT_EQ(t.candidates[1].size(), 9u);
}

// Overlapping bodies both mark the shared cells.
TEST(EncodeScene, OverlapKeepsBothCandidates) {
  const auto schema = ClassSchema::body_hands();
  SceneAnnotation s;
  s.width = 64;
  s.height = 64;
  s.objects.push_back({{0, 0, 40, 40}, schema.body_class(), std::nullopt, std::nullopt});
  s.objects.push_back({{24, 24, 63, 63}, schema.body_class(), std::nullopt, std::nullopt});
  const int strides[] = {8};
  const auto levels = make_levels(64, 64, strides);
  const auto t = encode_scene(s, levels, 2.0, schema);
  const auto ci = t.levels[0].level.cell_index({4, 4});
  EXPECT_TRUE(t.levels[0].candidate(ci, 0));
  EXPECT_TRUE(t.levels[0].candidate(ci, 1));
}

TEST(EncodeScene, RejectsBadScenes) {
  const auto schema = ClassSchema::body_hands();
  const int strides[] = {8};
  const auto levels = make_levels(64, 64, strides);
  auto degenerate = body_and_hand();
  degenerate.objects[1].box = {16, 16, 16, 32};
  EXPECT_THROW(encode_scene(degenerate, levels, 2.0, schema), ValidationError);
  auto orphan = body_and_hand();
  orphan.objects[1].parent.reset();
  EXPECT_THROW(encode_scene(orphan, levels, 2.0, schema), ValidationError);
}

// Floored corners and body-center cells are recovered exactly from every
// candidate on random scenes.
TEST(EncodeScene, InversionIdentitiesHold) {
  const auto schema = ClassSchema::human_parts();
  const int strides[] = {8, 16, 32};
  const auto levels = make_levels(320, 256, strides);
  Rng rng(3);
  for (int n = 0; n < 40; ++n) {
    const auto scene = fixtures::random_scene(rng, schema, 320, 256, 10);
    const auto t = encode_scene(scene, levels, 2.0, schema);
    for (std::size_t g = 0; g < scene.objects.size(); ++g) {
      const auto& obj = scene.objects[g];
      for (const auto& c : t.candidates[g]) {
        const auto& lvl = levels[static_cast<std::size_t>(c.anchor.level)];
        const auto fc = floored_corners(obj.box, lvl);
        EXPECT_EQ(c.anchor.cell.x - c.box_offsets[0], fc[0]);
        EXPECT_EQ(c.anchor.cell.y - c.box_offsets[1], fc[1]);
        EXPECT_EQ(c.anchor.cell.x + c.box_offsets[2], fc[2]);
        EXPECT_EQ(c.anchor.cell.y + c.box_offsets[3], fc[3]);
        for (double v : c.box_offsets) EXPECT_GE(v, 0.0);
        if (!schema.is_part(obj.cls)) continue;
        const Point bc = center(scene.objects[*obj.parent].box);
        EXPECT_EQ(c.anchor.cell.x + 2.0 * c.assoc_offsets[0], std::floor(bc.x / lvl.stride));
        EXPECT_EQ(c.anchor.cell.y + 2.0 * c.assoc_offsets[1], std::floor(bc.y / lvl.stride));
      }
    }
  }
}

// Shrinking a box never adds candidate cells.
TEST(EncodeScene, ShrinkingIsMonotone) {
  const auto schema = ClassSchema::body_hands();
  const int strides[] = {8, 16};
  const auto levels = make_levels(256, 256, strides);
  Rng rng(9);
  for (int n = 0; n < 100; ++n) {
    SceneAnnotation s;
    s.width = s.height = 256;
    const BBox big = fixtures::random_box(rng, 256, 256, 20, 200);
    s.objects.push_back({big, schema.body_class(), std::nullopt, std::nullopt});
    const auto before = encode_scene(s, levels, 2.0, schema).candidates[0];
    s.objects[0].box = {big.x_l + rng.uniform(0, 8), big.y_t + rng.uniform(0, 8),
                        big.x_r - rng.uniform(0, 8), big.y_b - rng.uniform(0, 8)};
    const auto after = encode_scene(s, levels, 2.0, schema).candidates[0];
    EXPECT_LE(after.size(), before.size());
    for (const auto& c : after) {
      bool found = false;
      for (const auto& d : before) found = found || d.anchor == c.anchor;
      EXPECT_TRUE(found);
    }
  }
}

TEST(ResolveParent, ExplicitNearestAndOrphan) {
  const auto schema = ClassSchema::body_hands();
  SceneAnnotation s;
  s.width = s.height = 200;
  s.objects.push_back({{0, 0, 110, 110}, schema.body_class(), std::nullopt, std::nullopt});    // center (55,55)
  s.objects.push_back({{0, 0, 200, 200}, schema.body_class(), std::nullopt, std::nullopt});    // center (100,100)
  s.objects.push_back({{45, 45, 55, 55}, schema.find("hand"), std::nullopt, std::nullopt});    // center (50,50)
  s.objects.push_back({{195, 5, 199, 9}, schema.find("hand"), 1, std::nullopt});
  EXPECT_EQ(resolve_parent(2, s, schema), 0u);
  EXPECT_EQ(resolve_parent(3, s, schema), 1u);
  s.objects[1].box = {150, 150, 200, 200};
  s.objects[3].parent.reset();
  EXPECT_THROW(resolve_parent(3, s, schema), ValidationError);
}

// Equal distances go to the smaller body.
TEST(ResolveParent, TieGoesToSmallerBody) {
  const auto schema = ClassSchema::body_hands();
  SceneAnnotation s;
  s.width = s.height = 200;
  s.objects.push_back({{0, 0, 100, 100}, schema.body_class(), std::nullopt, std::nullopt});
  s.objects.push_back({{20, 20, 80, 80}, schema.body_class(), std::nullopt, std::nullopt});
  s.objects.push_back({{45, 45, 55, 55}, schema.find("hand"), std::nullopt, std::nullopt});
  EXPECT_EQ(resolve_parent(2, s, schema), 1u);
  const auto stats = resolve_parents(s, schema);
  EXPECT_EQ(stats.resolved, 1u);
  EXPECT_EQ(stats.ambiguous, 1u);
  EXPECT_EQ(s.objects[2].parent, 1u);
}
