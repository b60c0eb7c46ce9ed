// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

// Slow, straightforward reference implementations. They share types with the
// library but none of its algorithms, so agreement is meaningful.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bodylink/assignment.hpp"
#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"

namespace bodylink::oracle {

/// IoU from explicit overlap lengths.
double box_iou(const BBox& a, const BBox& b);

/// O(n^2) greedy NMS: repeatedly takes the best remaining detection by linear
/// scan and checks it against every detection kept so far.
std::vector<Detection> nms(std::span<const Detection> dets, const NmsConfig& cfg,
                           const ClassSchema& schema);

/// Top-K assignment by scanning every cell of every level, fully sorting each
/// object's candidates, then settling shared anchors.
struct ReferenceAssignment {
  /// Selected anchor indices per object, in rank order.
  std::vector<std::vector<std::size_t>> per_object;
  std::vector<std::vector<double>> t;
};
ReferenceAssignment assign(const DenseMaps& predictions, const SceneAnnotation& scene,
                           const AlignmentConfig& cfg);

/// Enumerates every capacity-respecting part-to-body assignment and returns
/// the lexicographically best one under the documented processing order.
AssociationResult match(std::span<const Detection> bodies, std::span<const Detection> parts,
                        const CapacityTable& capacity, Enclosure mode, bool use_predicted_center);

/// All-points interpolated AP from a ranked list of true/false flags: the
/// mean over ground truth of the best precision at or beyond each hit.
double ranked_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt);

/// Central finite difference of f with respect to *x.
double central_difference(const std::function<double()>& f, double* x, double h = 1e-4);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace bodylink::oracle
