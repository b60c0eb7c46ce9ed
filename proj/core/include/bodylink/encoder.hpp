// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bodylink/classes.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/geometry.hpp"

namespace bodylink {

struct GroundTruthObject {
  BBox box;
  ClassId cls;
  /// Index of the parent body in the same scene. Set iff the class is a part
  /// (may be absent before resolve_parent has run on raw annotations).
  std::optional<std::size_t> parent;
  /// Annotation id from the source file, if any. Informational.
  std::optional<std::int64_t> source_id;
};

struct SceneAnnotation {
  std::int64_t image_id = 0;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthObject> objects;
};

/// Throws ValidationError naming the first offending object: degenerate or
/// non-finite boxes, unknown classes, parts without a body parent, parents
/// out of range or not of body kind, bodies with a parent.
void validate_scene(const SceneAnnotation& scene, const ClassSchema& schema);

/// Clips every box to the image extent.
SceneAnnotation clamp_to_image(SceneAnnotation scene);

/// Integer floor of a coordinate on a level: floor(v / s).
int floor_div(double v, int stride) noexcept;

/// Floored box corners on a level: (floor(x_l/s), floor(y_t/s), floor(x_r/s), floor(y_b/s)).
std::array<int, 4> floored_corners(const BBox& box, const FeatureLevel& level) noexcept;

/// Side offsets (l, t, r, b) in cells of `cell` against `box`. Throws
/// std::invalid_argument when the cell lies outside the floored box.
std::array<double, 4> encode_box_offsets(const BBox& box, Cell cell, const FeatureLevel& level);

/// Part-to-body offset (m, n) = ((floor(c_x/s) - x_i)/lambda, (floor(c_y/s) - y_i)/lambda).
/// Throws std::invalid_argument unless lambda > 0.
std::array<double, 2> encode_assoc_offset(Point body_center, Cell cell, const FeatureLevel& level,
                                          double lambda);

/// Offset for the single-scale ablation: the raw pixel displacement from the
/// anchor point divided by lambda * unit_px.
std::array<double, 2> encode_assoc_offset_fixed(Point body_center, Cell cell,
                                                const FeatureLevel& level, double lambda,
                                                double unit_px);

/// One (object, anchor) pair inside the object's floored box.
struct ObjectCandidate {
  AnchorRef anchor;
  std::array<double, 4> box_offsets{};
  std::array<double, 2> assoc_offsets{};  // zero for bodies
  Cell body_center_cell;                  // floor(c^b / s), parts only
};

/// Targets for one level. Per-cell planes describe the cell's primary object
/// (smallest area, then lowest index); the full many-to-many relation lives
/// in candidate_mask and DenseTargetMaps::candidates.
struct LevelTargets {
  FeatureLevel level;
  std::size_t num_objects = 0;
  std::vector<std::array<double, 4>> box_offsets;  // H*W
  std::vector<std::array<double, 2>> assoc_offsets;
  std::vector<Cell> body_center;
  std::vector<int> class_target;             // class id, 0 = background
  std::vector<std::int32_t> primary_object;  // -1 = background
  std::vector<std::uint8_t> candidate_mask;  // H*W*G

  bool candidate(std::size_t cell, std::size_t object) const noexcept {
    return candidate_mask[cell * num_objects + object] != 0;
  }
};

struct DenseTargetMaps {
  std::vector<LevelTargets> levels;
  double lambda = 2.0;
  std::vector<GroundTruthObject> objects;
  /// candidates[g]: every anchor inside object g's floored box, level-major.
  std::vector<std::vector<ObjectCandidate>> candidates;

  std::vector<FeatureLevel> feature_levels() const;
  std::size_t num_parts(const ClassSchema& schema) const;
};

/// Dense training targets for a scene: every anchor whose cell lies within
/// an object's floored box at a level is a candidate for that object.
DenseTargetMaps encode_scene(const SceneAnnotation& scene, std::span<const FeatureLevel> levels,
                             double lambda, const ClassSchema& schema);

/// Explicit parent if present, otherwise the enclosing body (center mode)
/// whose center is nearest the part center; ties go to the smaller body, then
/// the lower index. Throws ValidationError("orphan part ...") if none encloses it.
std::size_t resolve_parent(std::size_t part_index, const SceneAnnotation& scene,
                           const ClassSchema& schema);

struct ParentResolutionStats {
  std::size_t resolved = 0;   // parts whose parent was inferred
  std::size_t ambiguous = 0;  // of those, parts enclosed by more than one body
};

/// Fills in missing parent links in place.
ParentResolutionStats resolve_parents(SceneAnnotation& scene, const ClassSchema& schema);

}  // namespace bodylink
