// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"

namespace bodylink {

struct AlignmentConfig {
  double alpha = 1.0;  // exponent on the classification score
  double beta = 6.0;   // exponent on the IoU
  int k = 13;          // anchors kept per object
  /// When false every candidate anchor supervises its object (no top-K),
  /// which is the "without task alignment" ablation.
  bool top_k = true;

  void validate() const;
};

/// t = s^alpha * u^beta, with 0^0 = 1.
double alignment_metric(double s, double u, const AlignmentConfig& cfg) noexcept;

struct SelectedAnchor {
  AnchorRef anchor;
  std::size_t anchor_index = 0;  // AnchorLayout index
  std::size_t object = 0;
  double t = 0.0;  // alignment metric
  double u = 0.0;  // IoU of the predicted box with the object's box
  double s = 0.0;  // predicted probability of the object's class
};

/// An anchor picked by several objects' top-K lists.
struct AssignmentConflict {
  AnchorRef anchor;
  std::size_t anchor_index = 0;
  std::size_t winner = 0;
  std::vector<std::size_t> losers;
};

struct AssignmentResult {
  int k = 0;
  std::size_t num_anchors = 0;
  /// per_object[g]: anchors supervising g, sorted by descending t (ties:
  /// higher u, then lower anchor index).
  std::vector<std::vector<SelectedAnchor>> per_object;
  std::vector<AssignmentConflict> conflicts;

  std::size_t total_selected() const noexcept;
};

/// Scores every candidate anchor of each object, keeps its top-K across all
/// levels, then resolves anchors claimed by several objects in favor of the
/// higher t (ties: higher u, then lower object index). Class scores are the
/// sigmoid of the prediction logits. Throws ValidationError if the prediction
/// and target grids differ.
AssignmentResult assign(const DenseMaps& predictions, const DenseTargetMaps& targets,
                        const AlignmentConfig& cfg);

/// Per-anchor soft classification targets, indexed by AnchorLayout index.
struct ClsTargets {
  std::vector<double> value;  // 0 on background anchors
  std::vector<int> class_id;  // 0 on background anchors
};

/// For object g: t / max_t(g) * max_u(g) on each of its selected anchors.
/// Objects whose selected anchors all have t = 0 get zero targets.
ClsTargets normalized_cls_target(const AssignmentResult& assignment,
                                 const DenseTargetMaps& targets);

}  // namespace bodylink
