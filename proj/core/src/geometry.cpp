// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bodylink/errors.hpp"

namespace bodylink {

bool BBox::valid() const noexcept {
  return std::isfinite(x_l) && std::isfinite(y_t) && std::isfinite(x_r) &&
         std::isfinite(y_b) && x_l <= x_r && y_t <= y_b;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x_r, b.x_r) - std::max(a.x_l, b.x_l);
  const double ih = std::min(a.y_b, b.y_b) - std::max(a.y_t, b.y_t);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Point center(const BBox& b) noexcept {
  return {(b.x_l + b.x_r) / 2.0, (b.y_t + b.y_b) / 2.0};
}

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

Cell grid_cell(Point p, const FeatureLevel& level) noexcept {
  const double s = level.stride;
  const auto cx = static_cast<long long>(std::floor(p.x / s));
  const auto cy = static_cast<long long>(std::floor(p.y / s));
  return {static_cast<int>(std::clamp<long long>(cx, 0, level.width - 1)),
          static_cast<int>(std::clamp<long long>(cy, 0, level.height - 1))};
}

Point anchor_point(Cell cell, const FeatureLevel& level) noexcept {
  return {static_cast<double>(level.stride) * cell.x,
          static_cast<double>(level.stride) * cell.y};
}

bool contains(const BBox& outer, Point p) noexcept {
  return p.x >= outer.x_l && p.x <= outer.x_r && p.y >= outer.y_t && p.y <= outer.y_b;
}

bool contains(const BBox& body, const BBox& part, Enclosure mode) noexcept {
  if (mode == Enclosure::center) return contains(body, center(part));
  return part.x_l >= body.x_l && part.x_r <= body.x_r && part.y_t >= body.y_t &&
         part.y_b <= body.y_b;
}

std::vector<FeatureLevel> make_levels(int image_width, int image_height,
                                      std::span<const int> strides) {
  if (image_width <= 0 || image_height <= 0)
    throw ValidationError("image extent must be positive");
  std::vector<FeatureLevel> levels;
  levels.reserve(strides.size());
  for (int s : strides) {
    if (s < 1) throw ValidationError("stride must be >= 1, got " + std::to_string(s));
    levels.push_back({s, (image_height + s - 1) / s, (image_width + s - 1) / s, std::nullopt});
  }
  validate_levels(levels);
  return levels;
}

void validate_levels(std::span<const FeatureLevel> levels) {
  if (levels.empty()) throw ValidationError("at least one feature level is required");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    if (l.stride < 1 || l.width < 1 || l.height < 1)
      throw ValidationError("feature level " + std::to_string(i) + " has invalid geometry");
    if (i > 0 && levels[i - 1].stride >= l.stride)
      throw ValidationError("feature levels must be strictly increasing in stride");
  }
}

}  // namespace bodylink
