// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bodylink/classes.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/geometry.hpp"

namespace bodylink {

struct Detection {
  BBox box;
  ClassId cls;
  double score = 0.0;
  AnchorRef anchor;
  std::size_t anchor_index = 0;
  std::optional<Point> body_center;  // part classes only
};

/// Confidence and IoU thresholds for the body and part NMS streams.
struct NmsConfig {
  double body_conf = 0.05;
  double body_iou = 0.6;
  double part_conf = 0.05;
  double part_iou = 0.6;

  /// Body 0.05/0.6, part 0.05/0.6.
  static NmsConfig body_hands() noexcept { return {}; }
  /// Body 0.05/0.6, part 0.005/0.75.
  static NmsConfig human_parts() noexcept { return {0.05, 0.6, 0.005, 0.75}; }

  void validate() const;
};

enum class UnmatchedReason { no_enclosing_body, capacity_exhausted };

struct PartBodyMatch {
  std::size_t part = 0;  // index into the parts list
  std::size_t body = 0;  // index into the bodies list
  double distance = 0.0;
};

struct UnmatchedPart {
  std::size_t part = 0;
  UnmatchedReason reason = UnmatchedReason::no_enclosing_body;
};

struct AssociationResult {
  std::vector<PartBodyMatch> matches;  // in processing order
  std::vector<UnmatchedPart> unmatched;

  /// Body index matched to each part, nullopt if unmatched.
  std::vector<std::optional<std::size_t>> body_of_part(std::size_t num_parts) const;
};

/// One detection per anchor whose best class probability is >= conf_floor.
/// Part anchors also carry their predicted body center. Output is in anchor
/// index order.
std::vector<Detection> decode_boxes(const DenseMaps& maps, const ClassSchema& schema,
                                    double conf_floor);

/// Class-aware greedy NMS. Detections are visited by descending score (ties:
/// lower anchor index); one is kept iff its score reaches the confidence
/// threshold for its kind and its IoU with every kept detection of the same
/// class is <= the IoU threshold for its kind. Output is in visiting order.
std::vector<Detection> nms(std::span<const Detection> dets, const NmsConfig& cfg,
                           const ClassSchema& schema);

/// Greedy part-to-body matching. Parts are processed by descending score
/// (ties: lower index). Candidates are bodies enclosing the part (per mode)
/// with capacity left for the part's class; the one whose center is nearest
/// the part's predicted body center wins (ties: smaller area, lower index).
AssociationResult match_parts(std::span<const Detection> bodies, std::span<const Detection> parts,
                              const CapacityTable& capacity, Enclosure mode);

/// The same matcher using the part's own box center instead of the predicted
/// body center (the no-association-head baseline).
AssociationResult match_parts_baseline(std::span<const Detection> bodies,
                                       std::span<const Detection> parts,
                                       const CapacityTable& capacity, Enclosure mode);

enum class Matcher { predicted_center, part_center };

struct DecodeOptions {
  NmsConfig nms;
  CapacityTable capacity;  // empty -> CapacityTable::defaults(schema)
  Enclosure enclosure = Enclosure::center;
  Matcher matcher = Matcher::predicted_center;
};

struct PipelineResult {
  std::vector<Detection> bodies;  // NMS survivors, descending score
  std::vector<Detection> parts;
  AssociationResult association;  // indices into bodies / parts
};

/// decode_boxes -> split by class kind -> NMS per stream -> matching.
PipelineResult decode_pipeline(const DenseMaps& maps, const ClassSchema& schema,
                               const DecodeOptions& options);

}  // namespace bodylink
