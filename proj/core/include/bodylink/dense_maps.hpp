// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bodylink/geometry.hpp"

namespace bodylink {

/// Identifies one anchor point in a pyramid.
struct AnchorRef {
  int level = 0;
  Cell cell;

  friend bool operator==(const AnchorRef&, const AnchorRef&) = default;
};

/// Maps anchors to a single dense index: level offset + y * W + x.
class AnchorLayout {
 public:
  AnchorLayout() = default;
  explicit AnchorLayout(std::span<const FeatureLevel> levels);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t index(const AnchorRef& a) const noexcept {
    return offsets_[static_cast<std::size_t>(a.level)] +
           levels_[static_cast<std::size_t>(a.level)].cell_index(a.cell);
  }
  AnchorRef anchor(std::size_t index) const noexcept;
  const std::vector<FeatureLevel>& levels() const noexcept { return levels_; }

 private:
  std::vector<FeatureLevel> levels_;
  std::vector<std::size_t> offsets_;  // levels + 1 entries
};

/// How association outputs (m, n) translate into pixels.
///   per_level_stride: c = s * (x_i + lambda * m)  (the multi-scale encoding)
///   fixed_unit:       c = s * x_i + lambda * m * unit_px  (one global unit)
enum class AssocMode { per_level_stride, fixed_unit };

/// Network outputs for one pyramid level, channel-major: every channel is an
/// H x W row-major plane.
struct LevelMaps {
  FeatureLevel level;
  int num_classes = 0;
  int dfl_bins = 0;           // 0: box holds 4 direct side offsets in cells
  std::vector<double> box;    // box_channels() planes
  std::vector<double> cls;    // num_classes planes of logits
  std::vector<double> assoc;  // 2 planes: m, n

  int box_channels() const noexcept { return dfl_bins > 0 ? 4 * dfl_bins : 4; }
  std::size_t plane() const noexcept { return level.cells(); }

  double& box_at(int ch, std::size_t cell) { return box[static_cast<std::size_t>(ch) * plane() + cell]; }
  double box_at(int ch, std::size_t cell) const { return box[static_cast<std::size_t>(ch) * plane() + cell]; }
  double& cls_at(int ch, std::size_t cell) { return cls[static_cast<std::size_t>(ch) * plane() + cell]; }
  double cls_at(int ch, std::size_t cell) const { return cls[static_cast<std::size_t>(ch) * plane() + cell]; }
  double& assoc_at(int ch, std::size_t cell) { return assoc[static_cast<std::size_t>(ch) * plane() + cell]; }
  double assoc_at(int ch, std::size_t cell) const { return assoc[static_cast<std::size_t>(ch) * plane() + cell]; }
};

/// Dense predictions for one image: the O_b, O_c, O_d outputs at every level.
struct DenseMaps {
  std::vector<LevelMaps> levels;
  double lambda = 2.0;
  AssocMode assoc_mode = AssocMode::per_level_stride;
  double assoc_unit_px = 0.0;  // only for AssocMode::fixed_unit

  int num_classes() const noexcept { return levels.empty() ? 0 : levels.front().num_classes; }
  int dfl_bins() const noexcept { return levels.empty() ? 0 : levels.front().dfl_bins; }
  std::vector<FeatureLevel> feature_levels() const;
  AnchorLayout layout() const { return AnchorLayout(feature_levels()); }
};

/// Zero-filled maps. Class logits start at `background_logit`.
DenseMaps make_dense_maps(std::span<const FeatureLevel> levels, int num_classes, int dfl_bins,
                          double lambda, double background_logit = 0.0);

/// Throws ValidationError when plane sizes disagree with the geometry.
void validate_maps(const DenseMaps& maps);

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

/// Softmax-weighted bin index of one side distribution.
double dfl_expectation(std::span<const double> logits);

/// Side offsets (l, t, r, b) in cells at one anchor, expectation-decoding
/// DFL logits when the maps are in DFL mode.
std::array<double, 4> side_offsets(const LevelMaps& maps, std::size_t cell);

/// Image-space box predicted at an anchor by inverting the side-offset
/// relation: (s(x_i - l), s(y_i - t), s(x_i + r), s(y_i + b)).
BBox decode_box(const FeatureLevel& level, Cell cell, const std::array<double, 4>& ltrb) noexcept;

/// Predicted body center from association outputs at an anchor.
Point decode_body_center(const DenseMaps& maps, const FeatureLevel& level, Cell cell, double m,
                         double n) noexcept;

}  // namespace bodylink
