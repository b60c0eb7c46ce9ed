// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bodylink {

// Coordinates are continuous image pixels, origin top-left, y pointing down.
// Boxes are closed intervals: a point on the border is inside.

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
  double x_l = 0.0;
  double y_t = 0.0;
  double x_r = 0.0;
  double y_b = 0.0;

  double width() const noexcept { return x_r - x_l; }
  double height() const noexcept { return y_b - y_t; }
  double area() const noexcept { return width() * height(); }
  /// x_l <= x_r and y_t <= y_b, all finite.
  bool valid() const noexcept;
  bool degenerate() const noexcept { return !(width() > 0.0 && height() > 0.0); }

  static BBox from_xywh(double x, double y, double w, double h) noexcept {
    return {x, y, x + w, y + h};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// A feature-grid cell (x_i, y_i).
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// One level of the multi-scale feature pyramid.
struct FeatureLevel {
  int stride = 8;
  int height = 0;
  int width = 0;
  std::optional<int> channels;  // metadata only

  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t cell_index(Cell c) const noexcept {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.x);
  }
  Cell cell_at(std::size_t index) const noexcept {
    return {static_cast<int>(index % static_cast<std::size_t>(width)),
            static_cast<int>(index / static_cast<std::size_t>(width))};
  }
  bool in_grid(Cell c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  }

  friend bool operator==(const FeatureLevel& a, const FeatureLevel& b) noexcept {
    return a.stride == b.stride && a.height == b.height && a.width == b.width;
  }
};

double iou(const BBox& a, const BBox& b) noexcept;

Point center(const BBox& b) noexcept;

double distance(Point a, Point b) noexcept;

/// (floor(x/s), floor(y/s)) clamped into the level's grid.
Cell grid_cell(Point p, const FeatureLevel& level) noexcept;

/// Image-space position of an anchor point: (s * x_i, s * y_i).
Point anchor_point(Cell cell, const FeatureLevel& level) noexcept;

enum class Enclosure { center, full };

bool contains(const BBox& outer, Point p) noexcept;

/// center: body contains center(part); full: body contains all four corners.
bool contains(const BBox& body, const BBox& part, Enclosure mode) noexcept;

/// Builds the pyramid for an image, one level per stride. Grid sizes use
/// ceil division so the grid covers the whole image. Throws
/// ValidationError unless strides are >= 1 and strictly increasing.
std::vector<FeatureLevel> make_levels(int image_width, int image_height,
                                      std::span<const int> strides);

/// Throws ValidationError if the list is empty, not strictly increasing in
/// stride, or a level has a non-positive extent.
void validate_levels(std::span<const FeatureLevel> levels);

}  // namespace bodylink
