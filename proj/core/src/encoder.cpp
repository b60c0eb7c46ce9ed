// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bodylink/errors.hpp"

namespace bodylink {
namespace {

std::string object_name(const SceneAnnotation& scene, std::size_t i) {
  std::string s = "image " + std::to_string(scene.image_id) + " object " + std::to_string(i);
  if (const auto& id = scene.objects[i].source_id) s += " (annotation " + std::to_string(*id) + ")";
  return s;
}

}  // namespace

void validate_scene(const SceneAnnotation& scene, const ClassSchema& schema) {
  if (scene.width <= 0 || scene.height <= 0)
    throw ValidationError("image " + std::to_string(scene.image_id) + " has non-positive extent");
  const auto n = scene.objects.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = scene.objects[i];
    if (!o.box.valid() || o.box.degenerate())
      throw ValidationError(object_name(scene, i) + ": degenerate or invalid box");
    if (!schema.contains(o.cls))
      throw ValidationError(object_name(scene, i) + ": unknown class id " + std::to_string(o.cls.value));
    if (schema.is_part(o.cls)) {
      if (!o.parent) throw ValidationError(object_name(scene, i) + ": part without parent body");
      if (*o.parent >= n)
        throw ValidationError(object_name(scene, i) + ": parent index out of range");
      if (schema.is_part(scene.objects[*o.parent].cls))
        throw ValidationError(object_name(scene, i) + ": parent is not a body");
    } else if (o.parent) {
      throw ValidationError(object_name(scene, i) + ": body objects cannot have a parent");
    }
  }
}

SceneAnnotation clamp_to_image(SceneAnnotation scene) {
  const double w = scene.width, h = scene.height;
  for (auto& o : scene.objects) {
    o.box.x_l = std::clamp(o.box.x_l, 0.0, w);
    o.box.x_r = std::clamp(o.box.x_r, 0.0, w);
    o.box.y_t = std::clamp(o.box.y_t, 0.0, h);
    o.box.y_b = std::clamp(o.box.y_b, 0.0, h);
  }
  return scene;
}

int floor_div(double v, int stride) noexcept {
  return static_cast<int>(std::floor(v / static_cast<double>(stride)));
}

std::array<int, 4> floored_corners(const BBox& box, const FeatureLevel& level) noexcept {
  return {floor_div(box.x_l, level.stride), floor_div(box.y_t, level.stride),
          floor_div(box.x_r, level.stride), floor_div(box.y_b, level.stride)};
}

std::array<double, 4> encode_box_offsets(const BBox& box, Cell cell, const FeatureLevel& level) {
  const auto f = floored_corners(box, level);
  if (cell.x < f[0] || cell.x > f[2] || cell.y < f[1] || cell.y > f[3])
    throw std::invalid_argument("cell lies outside the floored box");
  return {static_cast<double>(cell.x - f[0]), static_cast<double>(cell.y - f[1]),
          static_cast<double>(f[2] - cell.x), static_cast<double>(f[3] - cell.y)};
}

std::array<double, 2> encode_assoc_offset(Point body_center, Cell cell, const FeatureLevel& level,
                                          double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const int cx = floor_div(body_center.x, level.stride);
  const int cy = floor_div(body_center.y, level.stride);
  return {static_cast<double>(cx - cell.x) / lambda, static_cast<double>(cy - cell.y) / lambda};
}

std::array<double, 2> encode_assoc_offset_fixed(Point body_center, Cell cell,
                                                const FeatureLevel& level, double lambda,
                                                double unit_px) {
  if (!(lambda > 0.0) || !(unit_px > 0.0))
    throw std::invalid_argument("lambda and unit must be positive");
  const Point p = anchor_point(cell, level);
  const double u = lambda * unit_px;
  return {(body_center.x - p.x) / u, (body_center.y - p.y) / u};
}

std::vector<FeatureLevel> DenseTargetMaps::feature_levels() const {
  std::vector<FeatureLevel> out;
  for (const auto& l : levels) out.push_back(l.level);
  return out;
}

std::size_t DenseTargetMaps::num_parts(const ClassSchema& schema) const {
  return static_cast<std::size_t>(std::count_if(
      objects.begin(), objects.end(), [&](const auto& o) { return schema.is_part(o.cls); }));
}

DenseTargetMaps encode_scene(const SceneAnnotation& raw, std::span<const FeatureLevel> levels,
                             double lambda, const ClassSchema& schema) {
  validate_levels(levels);
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  const SceneAnnotation scene = clamp_to_image(raw);
  validate_scene(scene, schema);

  const std::size_t g_count = scene.objects.size();
  DenseTargetMaps out;
  out.lambda = lambda;
  out.objects = scene.objects;
  out.candidates.resize(g_count);

  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto& level = levels[li];
    const auto cells = level.cells();
    LevelTargets lt;
    lt.level = level;
    lt.num_objects = g_count;
    lt.box_offsets.assign(cells, {0, 0, 0, 0});
    lt.assoc_offsets.assign(cells, {0, 0});
    lt.body_center.assign(cells, Cell{0, 0});
    lt.class_target.assign(cells, 0);
    lt.primary_object.assign(cells, -1);
    lt.candidate_mask.assign(cells * g_count, 0);

    for (std::size_t g = 0; g < g_count; ++g) {
      const auto& obj = scene.objects[g];
      const auto f = floored_corners(obj.box, level);
      const int x0 = std::max(f[0], 0), y0 = std::max(f[1], 0);
      const int x1 = std::min(f[2], level.width - 1), y1 = std::min(f[3], level.height - 1);
      const bool part = schema.is_part(obj.cls);
      const Point body_c = part ? center(scene.objects[*obj.parent].box) : Point{};
      const Cell body_cell{floor_div(body_c.x, level.stride), floor_div(body_c.y, level.stride)};

      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Cell cell{x, y};
          const auto ci = level.cell_index(cell);
          ObjectCandidate cand;
          cand.anchor = {static_cast<int>(li), cell};
          cand.box_offsets = encode_box_offsets(obj.box, cell, level);
          if (part) {
            cand.assoc_offsets = encode_assoc_offset(body_c, cell, level, lambda);
            cand.body_center_cell = body_cell;
          }
          out.candidates[g].push_back(cand);
          lt.candidate_mask[ci * g_count + g] = 1;

          const auto cur = lt.primary_object[ci];
          const bool take = cur < 0 ||
                            obj.box.area() < scene.objects[static_cast<std::size_t>(cur)].box.area();
          if (take) {
            lt.primary_object[ci] = static_cast<std::int32_t>(g);
            lt.class_target[ci] = obj.cls.value;
            lt.box_offsets[ci] = cand.box_offsets;
            lt.assoc_offsets[ci] = cand.assoc_offsets;
            lt.body_center[ci] = cand.body_center_cell;
          }
        }
      }
    }
    out.levels.push_back(std::move(lt));
  }
  return out;
}

std::size_t resolve_parent(std::size_t part_index, const SceneAnnotation& scene,
                           const ClassSchema& schema) {
  const auto& part = scene.objects.at(part_index);
  if (!schema.is_part(part.cls))
    throw std::invalid_argument("resolve_parent called on a body object");
  if (part.parent) return *part.parent;

  const Point pc = center(part.box);
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& b = scene.objects[i];
    if (schema.is_part(b.cls) || !contains(b.box, part.box, Enclosure::center)) continue;
    const double d = distance(pc, center(b.box));
    const double a = b.box.area();
    if (d < best_d || (d == best_d && a < best_area)) {
      best = i;
      best_d = d;
      best_area = a;
    }
  }
  if (!best) {
    std::string msg = "orphan part: image " + std::to_string(scene.image_id) + " object " +
                      std::to_string(part_index);
    if (part.source_id) msg += " (annotation " + std::to_string(*part.source_id) + ")";
    throw ValidationError(msg + " is not enclosed by any body");
  }
  return *best;
}

ParentResolutionStats resolve_parents(SceneAnnotation& scene, const ClassSchema& schema) {
  ParentResolutionStats stats;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    auto& o = scene.objects[i];
    if (!schema.contains(o.cls) || !schema.is_part(o.cls) || o.parent) continue;
    const auto enclosing = std::count_if(scene.objects.begin(), scene.objects.end(), [&](const auto& b) {
      return schema.contains(b.cls) && !schema.is_part(b.cls) &&
             contains(b.box, o.box, Enclosure::center);
    });
    o.parent = resolve_parent(i, scene, schema);
    ++stats.resolved;
    if (enclosing > 1) ++stats.ambiguous;
  }
  return stats;
}

}  // namespace bodylink
