// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

// Random inputs shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"
#include "bodylink/random.hpp"

namespace bodylink::fixtures {

/// Prediction maps with random offsets, logits and association outputs.
inline DenseMaps random_maps(std::span<const FeatureLevel> levels, int num_classes, Rng& rng,
                             double lambda = 2.0, int dfl_bins = 0) {
  DenseMaps maps = make_dense_maps(levels, num_classes, dfl_bins, lambda);
  for (auto& lm : maps.levels) {
    for (auto& v : lm.box) v = dfl_bins > 0 ? rng.normal(0.0, 1.5) : rng.uniform(0.0, 6.0);
    for (auto& v : lm.cls) v = rng.normal(0.0, 2.0);
    for (auto& v : lm.assoc) v = rng.uniform(-3.0, 3.0);
  }
  return maps;
}

inline BBox random_box(Rng& rng, double width, double height, double min_side, double max_side) {
  const double w = rng.uniform(min_side, max_side);
  const double h = rng.uniform(min_side, max_side);
  const double x = rng.uniform(0.0, width - w);
  const double y = rng.uniform(0.0, height - h);
  return {x, y, x + w, y + h};
}

/// Bodies first, then parts parented to a random body. Parts need not lie
/// inside their parent; the encoder does not require it.
inline SceneAnnotation random_scene(Rng& rng, const ClassSchema& schema, int width, int height,
                                    int max_objects) {
  SceneAnnotation scene;
  scene.width = width;
  scene.height = height;
  const int total = rng.uniform_int(1, max_objects);
  const int bodies = rng.uniform_int(1, std::max(1, total / 2));
  const auto parts = schema.part_classes();
  for (int i = 0; i < bodies; ++i)
    scene.objects.push_back({random_box(rng, width, height, 16.0, width / 2.0), schema.body_class(),
                             std::nullopt, std::nullopt});
  for (int i = bodies; i < total; ++i) {
    const ClassId cls = parts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(parts.size()) - 1))];
    const auto parent = static_cast<std::size_t>(rng.uniform_int(0, bodies - 1));
    scene.objects.push_back({random_box(rng, width, height, 6.0, width / 4.0), cls, parent, std::nullopt});
  }
  return scene;
}

/// Clustered detections so that overlaps and suppression are common. Scores
/// are drawn from a coarse grid now and then to produce ties.
inline std::vector<Detection> random_detections(Rng& rng, const ClassSchema& schema, int n) {
  std::vector<Detection> out;
  std::vector<BBox> seeds;
  const int clusters = std::max(1, n / 8);
  for (int i = 0; i < clusters; ++i) seeds.push_back(random_box(rng, 512.0, 512.0, 20.0, 150.0));
  std::vector<std::size_t> anchors(static_cast<std::size_t>(n) * 3);
  for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = i;
  for (std::size_t i = anchors.size(); i-- > 1;)
    std::swap(anchors[i], anchors[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
  for (int i = 0; i < n; ++i) {
    const BBox& s = seeds[static_cast<std::size_t>(rng.uniform_int(0, clusters - 1))];
    const double jitter = 0.15 * s.width();
    Detection d;
    d.box = {s.x_l + rng.normal(0.0, jitter), s.y_t + rng.normal(0.0, jitter),
             s.x_r + rng.normal(0.0, jitter), s.y_b + rng.normal(0.0, jitter)};
    if (d.box.x_r < d.box.x_l) std::swap(d.box.x_l, d.box.x_r);
    if (d.box.y_b < d.box.y_t) std::swap(d.box.y_t, d.box.y_b);
    d.cls = ClassId{rng.uniform_int(1, schema.size())};
    d.score = rng.bernoulli(0.3) ? 0.05 * rng.uniform_int(0, 20) : rng.uniform();
    d.anchor_index = anchors[static_cast<std::size_t>(i)];
    out.push_back(d);
  }
  return out;
}

/// A small matching problem on an integer grid so that distance and area
/// ties occur.
struct MatchingProblem {
  std::vector<Detection> bodies;
  std::vector<Detection> parts;
  CapacityTable capacity;
};

inline MatchingProblem random_matching(Rng& rng, const ClassSchema& schema, int max_bodies,
                                       int max_parts) {
  MatchingProblem p;
  const int nb = rng.uniform_int(0, max_bodies);
  const int np = rng.uniform_int(0, max_parts);
  for (int i = 0; i < nb; ++i) {
    Detection d;
    const double x = 4.0 * rng.uniform_int(0, 10), y = 4.0 * rng.uniform_int(0, 10);
    const double w = 4.0 * rng.uniform_int(4, 12), h = 4.0 * rng.uniform_int(4, 12);
    d.box = {x, y, x + w, y + h};
    d.cls = schema.body_class();
    d.score = 0.9;
    d.anchor_index = static_cast<std::size_t>(i);
    p.bodies.push_back(d);
  }
  const auto classes = schema.part_classes();
  for (int i = 0; i < np; ++i) {
    Detection d;
    const double x = 2.0 * rng.uniform_int(2, 36), y = 2.0 * rng.uniform_int(2, 36);
    const double w = 2.0 * rng.uniform_int(1, 6);
    d.box = {x, y, x + w, y + w};
    d.cls = classes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(classes.size()) - 1))];
    d.score = 0.1 * rng.uniform_int(1, 4);
    d.anchor_index = 100 + static_cast<std::size_t>(i);
    d.body_center = Point{4.0 * rng.uniform_int(2, 18), 4.0 * rng.uniform_int(2, 18)};
    p.parts.push_back(d);
  }
  std::vector<int> cap(static_cast<std::size_t>(schema.size()) + 1, 0);
  for (const auto c : classes) cap[static_cast<std::size_t>(c.value)] = rng.uniform_int(1, 2);
  p.capacity = CapacityTable(cap);
  return p;
}

}  // namespace bodylink::fixtures
