// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/encoder.hpp"

namespace bodylink {

/// SVG 1.1 overlay of ground truth: body boxes, part boxes and one line per
/// part from its center to its parent body's center.
std::string render_svg(const SceneAnnotation& scene, const ClassSchema& schema);

/// Overlay of decoded detections. Associated parts get a line to their body's
/// center; unassociated parts are drawn dashed red with no line.
std::string render_svg(int width, int height, const PipelineResult& result,
                       const ClassSchema& schema);

}  // namespace bodylink
