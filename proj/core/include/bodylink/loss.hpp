// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bodylink/assignment.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"

namespace bodylink {

struct LossWeights {
  double iou = 7.5;
  double dfl = 1.5;
  double cls = 0.5;
  double assoc = 0.2;

  void validate() const;
};

struct DflConfig {
  int bins = 16;  // per side; the largest representable offset is bins - 1 cells
};

/// A scalar loss and its gradient. The gradient has the same layout as the
/// prediction maps it was computed from (box, cls and assoc planes).
struct LossTerm {
  double value = 0.0;
  DenseMaps grad;
  std::size_t clamped_targets = 0;  // DFL only
};

struct LossReport {
  double iou = 0.0;
  double dfl = 0.0;
  double cls = 0.0;
  double assoc = 0.0;
  double total = 0.0;
  DenseMaps grad;
  std::size_t dfl_clamped = 0;
};

/// Maps with identical geometry and every value zero.
DenseMaps zeros_like(const DenseMaps& maps);

// --- Per-element building blocks -------------------------------------------

/// 1 - GIoU(pred, gt) and its gradient with respect to the predicted corners
/// (x_l, y_t, x_r, y_b). Inverted predicted extents count as zero area.
struct GiouLoss {
  double value = 0.0;
  std::array<double, 4> grad{};
};
GiouLoss giou_loss(const BBox& pred, const BBox& gt) noexcept;

/// The two bins bracketing a continuous target and their interpolation weights.
struct DflBracket {
  int left = 0;
  double w_left = 1.0;
  double w_right = 0.0;
  bool clamped = false;
};
DflBracket dfl_bracket(double target, int bins) noexcept;

/// Cross-entropy of one side distribution against the bracketing bins.
/// `grad` receives d loss / d logits (same length as `logits`).
double dfl_side_loss(std::span<const double> logits, double target, std::span<double> grad,
                     bool* clamped = nullptr);

/// Binary cross-entropy with logits for a soft target, and its derivative.
double bce_with_logits(double z, double y) noexcept;
double bce_with_logits_grad(double z, double y) noexcept;

// --- Map-level terms ---------------------------------------------------------

/// Part-to-body association loss over the anchors selected for part objects:
///   L = 1/(K P) * sum_j 1/2 (|floor(c_x/s) - (x + lambda m)| + |floor(c_y/s) - (y + lambda n)|)
/// K is the configured top-K even when fewer anchors were selected; P is the
/// number of part objects. Zero when the scene has no parts. The subgradient
/// of |.| at zero is 0.
LossTerm assoc_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                    const AssignmentResult& assignment, double lambda, const ClassSchema& schema);

/// Mean over selected anchors of 1 - GIoU between the decoded predicted box
/// and the object's box. Gradients flow into the box planes (through the DFL
/// expectation when the maps are in DFL mode).
LossTerm iou_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                  const AssignmentResult& assignment);

/// Distribution focal loss: mean over selected anchors and 4 sides of the
/// interpolated cross-entropy on the bins bracketing the Eq.-1 side offset.
/// Requires maps in DFL mode with cfg.bins bins. Out-of-range targets are
/// clamped and counted.
LossTerm dfl_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                  const AssignmentResult& assignment, const DflConfig& cfg);

/// Mean binary cross-entropy over all anchors and classes against the
/// task-aligned soft targets.
LossTerm cls_loss(const DenseMaps& pred, const ClsTargets& targets);

/// total = w_iou iou + w_dfl dfl + w_cls cls + w_assoc assoc; the gradient is
/// the same weighted sum of the term gradients.
LossReport total_loss(const LossTerm& iou, const LossTerm& dfl, const LossTerm& cls,
                      const LossTerm& assoc, const LossWeights& weights);

/// Runs all four terms on one assignment. The DFL term is zero for maps in
/// direct-offset mode.
LossReport compute_losses(const DenseMaps& pred, const DenseTargetMaps& targets,
                          const AssignmentResult& assignment, const ClassSchema& schema,
                          const LossWeights& weights);

}  // namespace bodylink
