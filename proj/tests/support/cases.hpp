// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

// Small hand-built cases used by more than one test.

#pragma once

#include "bodylink/assignment.hpp"
#include "bodylink/loss.hpp"

namespace bodylink::cases {

/// One body (16,16,64,64) whose center floors to cell (5,5) at stride 8, one
/// hand, K = 1. The selected hand anchor predicts x + 2m = 5, y + 2n = 6,
/// so the association loss is 1/2 (0 + 1) = 0.5.
struct SingleAnchorAssoc {
  ClassSchema schema = ClassSchema::body_hands();
  DenseMaps maps;
  DenseTargetMaps targets;
  AssignmentResult assignment;

  SingleAnchorAssoc() {
    const int strides[] = {8};
    const auto levels = make_levels(64, 64, strides);
    SceneAnnotation scene;
    scene.width = scene.height = 64;
    scene.objects.push_back({{16, 16, 64, 64}, schema.body_class(), std::nullopt, std::nullopt});
    scene.objects.push_back({{24, 24, 40, 40}, schema.find("hand"), 0, std::nullopt});
    targets = encode_scene(scene, levels, 2.0, schema);
    maps = make_dense_maps(levels, schema.size(), 0, 2.0);
    assignment = assign(maps, targets, AlignmentConfig{1.0, 6.0, 1, true});
    const SelectedAnchor& sa = assignment.per_object[1].at(0);
    auto& lm = maps.levels[0];
    const auto ci = lm.level.cell_index(sa.anchor.cell);
    lm.assoc_at(0, ci) = (5.0 - sa.anchor.cell.x) / 2.0;
    lm.assoc_at(1, ci) = (6.0 - sa.anchor.cell.y) / 2.0;
  }

  double loss() const { return assoc_loss(maps, targets, assignment, 2.0, schema).value; }
};

}  // namespace bodylink::cases
