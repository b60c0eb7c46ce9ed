// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/dense_maps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bodylink/errors.hpp"

namespace bodylink {

AnchorLayout::AnchorLayout(std::span<const FeatureLevel> levels)
    : levels_(levels.begin(), levels.end()) {
  offsets_.reserve(levels_.size() + 1);
  offsets_.push_back(0);
  for (const auto& l : levels_) offsets_.push_back(offsets_.back() + l.cells());
}

AnchorRef AnchorLayout::anchor(std::size_t index) const noexcept {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
  const auto level = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {static_cast<int>(level), levels_[level].cell_at(index - offsets_[level])};
}

std::vector<FeatureLevel> DenseMaps::feature_levels() const {
  std::vector<FeatureLevel> out;
  out.reserve(levels.size());
  for (const auto& l : levels) out.push_back(l.level);
  return out;
}

DenseMaps make_dense_maps(std::span<const FeatureLevel> levels, int num_classes, int dfl_bins,
                          double lambda, double background_logit) {
  validate_levels(levels);
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  if (dfl_bins == 1 || dfl_bins < 0) throw ValidationError("dfl_bins must be 0 or >= 2");
  DenseMaps maps;
  maps.lambda = lambda;
  for (const auto& level : levels) {
    LevelMaps lm;
    lm.level = level;
    lm.num_classes = num_classes;
    lm.dfl_bins = dfl_bins;
    lm.box.assign(static_cast<std::size_t>(lm.box_channels()) * level.cells(), 0.0);
    lm.cls.assign(static_cast<std::size_t>(num_classes) * level.cells(), background_logit);
    lm.assoc.assign(2 * level.cells(), 0.0);
    maps.levels.push_back(std::move(lm));
  }
  return maps;
}

void validate_maps(const DenseMaps& maps) {
  validate_levels(maps.feature_levels());
  if (!(maps.lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (maps.assoc_mode == AssocMode::fixed_unit && !(maps.assoc_unit_px > 0.0))
    throw ValidationError("fixed-unit association mode needs a positive unit");
  for (std::size_t i = 0; i < maps.levels.size(); ++i) {
    const auto& l = maps.levels[i];
    const auto cells = l.level.cells();
    if (l.num_classes != maps.num_classes() || l.dfl_bins != maps.dfl_bins())
      throw ValidationError("level " + std::to_string(i) + " disagrees on class/bin counts");
    if (l.box.size() != static_cast<std::size_t>(l.box_channels()) * cells ||
        l.cls.size() != static_cast<std::size_t>(l.num_classes) * cells ||
        l.assoc.size() != 2 * cells)
      throw ValidationError("level " + std::to_string(i) + " plane sizes do not match its grid");
  }
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) noexcept {
  if (p <= 0.0) return -HUGE_VAL;
  if (p >= 1.0) return HUGE_VAL;
  return std::log(p / (1.0 - p));
}

double dfl_expectation(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double e = std::exp(logits[k] - mx);
    z += e;
    acc += e * static_cast<double>(k);
  }
  return acc / z;
}

std::array<double, 4> side_offsets(const LevelMaps& maps, std::size_t cell) {
  std::array<double, 4> out{};
  if (maps.dfl_bins == 0) {
    for (int side = 0; side < 4; ++side) out[side] = maps.box_at(side, cell);
    return out;
  }
  std::vector<double> buf(static_cast<std::size_t>(maps.dfl_bins));
  for (int side = 0; side < 4; ++side) {
    for (int k = 0; k < maps.dfl_bins; ++k)
      buf[static_cast<std::size_t>(k)] = maps.box_at(side * maps.dfl_bins + k, cell);
    out[side] = dfl_expectation(buf);
  }
  return out;
}

BBox decode_box(const FeatureLevel& level, Cell cell, const std::array<double, 4>& ltrb) noexcept {
  const double s = level.stride;
  return {s * (cell.x - ltrb[0]), s * (cell.y - ltrb[1]), s * (cell.x + ltrb[2]),
          s * (cell.y + ltrb[3])};
}

Point decode_body_center(const DenseMaps& maps, const FeatureLevel& level, Cell cell, double m,
                         double n) noexcept {
  const double s = level.stride;
  if (maps.assoc_mode == AssocMode::fixed_unit) {
    const double u = maps.lambda * maps.assoc_unit_px;
    return {s * cell.x + u * m, s * cell.y + u * n};
  }
  return {s * (cell.x + maps.lambda * m), s * (cell.y + maps.lambda * n)};
}

}  // namespace bodylink
