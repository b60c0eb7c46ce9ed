// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bodylink/errors.hpp"

namespace bodylink {
namespace {

bool score_order(const Detection& a, const Detection& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.anchor_index < b.anchor_index;
}

AssociationResult greedy_match(std::span<const Detection> bodies, std::span<const Detection> parts,
                               const CapacityTable& capacity, Enclosure mode, Matcher matcher) {
  std::vector<std::size_t> order(parts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return parts[a].score > parts[b].score;
  });

  // used[body * classes + class]
  int max_class = 0;
  for (const auto& p : parts) max_class = std::max(max_class, p.cls.value);
  const auto stride = static_cast<std::size_t>(max_class) + 1;
  std::vector<int> used(bodies.size() * stride, 0);

  std::vector<Point> body_centers;
  body_centers.reserve(bodies.size());
  for (const auto& b : bodies) body_centers.push_back(center(b.box));

  AssociationResult out;
  for (const auto pi : order) {
    const Detection& part = parts[pi];
    Point query;
    if (matcher == Matcher::predicted_center) {
      if (!part.body_center)
        throw std::invalid_argument("part detection has no predicted body center");
      query = *part.body_center;
    } else {
      query = center(part.box);
    }
    const int cap = capacity[part.cls];
    bool any_enclosing = false;
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t bi = 0; bi < bodies.size(); ++bi) {
      if (!contains(bodies[bi].box, part.box, mode)) continue;
      any_enclosing = true;
      if (used[bi * stride + static_cast<std::size_t>(part.cls.value)] >= cap) continue;
      const double d = distance(query, body_centers[bi]);
      const double area = bodies[bi].box.area();
      if (d < best_d || (d == best_d && area < best_area)) {
        best = bi;
        best_d = d;
        best_area = area;
      }
    }
    if (best) {
      ++used[*best * stride + static_cast<std::size_t>(part.cls.value)];
      out.matches.push_back({pi, *best, best_d});
    } else {
      out.unmatched.push_back({pi, any_enclosing ? UnmatchedReason::capacity_exhausted
                                                 : UnmatchedReason::no_enclosing_body});
    }
  }
  return out;
}

}  // namespace

void NmsConfig::validate() const {
  for (double v : {body_conf, body_iou, part_conf, part_iou})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("NMS thresholds must lie in [0, 1]");
}

std::vector<std::optional<std::size_t>> AssociationResult::body_of_part(std::size_t num_parts) const {
  std::vector<std::optional<std::size_t>> out(num_parts);
  for (const auto& m : matches)
    if (m.part < num_parts) out[m.part] = m.body;
  return out;
}

std::vector<Detection> decode_boxes(const DenseMaps& maps, const ClassSchema& schema,
                                    double conf_floor) {
  validate_maps(maps);
  if (maps.num_classes() != schema.size())
    throw ValidationError("prediction maps carry " + std::to_string(maps.num_classes()) +
                          " classes, schema has " + std::to_string(schema.size()));
  const double logit_floor = logit(conf_floor);
  std::vector<bool> is_part(static_cast<std::size_t>(schema.size()));
  for (int ch = 0; ch < schema.size(); ++ch)
    is_part[static_cast<std::size_t>(ch)] = schema.is_part(ClassId::from_channel(ch));

  std::vector<Detection> out;
  std::vector<double> best;
  std::vector<int> best_ch;
  std::size_t level_offset = 0;
  for (std::size_t li = 0; li < maps.levels.size(); ++li) {
    const auto& lm = maps.levels[li];
    const auto cells = lm.plane();
    best.assign(cells, -std::numeric_limits<double>::infinity());
    best_ch.assign(cells, 0);
    for (int ch = 0; ch < lm.num_classes; ++ch) {
      const double* plane = lm.cls.data() + static_cast<std::size_t>(ch) * cells;
      for (std::size_t ci = 0; ci < cells; ++ci) {
        if (plane[ci] > best[ci]) {
          best[ci] = plane[ci];
          best_ch[ci] = ch;
        }
      }
    }
    for (std::size_t ci = 0; ci < cells; ++ci) {
      if (!(best[ci] >= logit_floor)) continue;
      const Cell cell = lm.level.cell_at(ci);
      Detection d;
      d.cls = ClassId::from_channel(best_ch[ci]);
      d.score = sigmoid(best[ci]);
      if (d.score < conf_floor) continue;
      d.anchor = {static_cast<int>(li), cell};
      d.anchor_index = level_offset + ci;
      d.box = decode_box(lm.level, cell, side_offsets(lm, ci));
      if (is_part[static_cast<std::size_t>(best_ch[ci])])
        d.body_center = decode_body_center(maps, lm.level, cell, lm.assoc_at(0, ci), lm.assoc_at(1, ci));
      out.push_back(d);
    }
    level_offset += cells;
  }
  return out;
}

std::vector<Detection> nms(std::span<const Detection> dets, const NmsConfig& cfg,
                           const ClassSchema& schema) {
  cfg.validate();
  std::vector<std::size_t> order;
  order.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const bool part = schema.is_part(dets[i].cls);
    if (dets[i].score >= (part ? cfg.part_conf : cfg.body_conf)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score_order(dets[a], dets[b]); });

  std::vector<std::vector<std::size_t>> kept_by_class(static_cast<std::size_t>(schema.size()) + 1);
  std::vector<Detection> out;
  for (const auto i : order) {
    const Detection& d = dets[i];
    const double thr = schema.is_part(d.cls) ? cfg.part_iou : cfg.body_iou;
    auto& kept = kept_by_class[static_cast<std::size_t>(d.cls.value)];
    bool keep = true;
    for (const auto k : kept) {
      if (iou(d.box, out[k].box) > thr) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    kept.push_back(out.size());
    out.push_back(d);
  }
  return out;
}

AssociationResult match_parts(std::span<const Detection> bodies, std::span<const Detection> parts,
                              const CapacityTable& capacity, Enclosure mode) {
  return greedy_match(bodies, parts, capacity, mode, Matcher::predicted_center);
}

AssociationResult match_parts_baseline(std::span<const Detection> bodies,
                                       std::span<const Detection> parts,
                                       const CapacityTable& capacity, Enclosure mode) {
  return greedy_match(bodies, parts, capacity, mode, Matcher::part_center);
}

PipelineResult decode_pipeline(const DenseMaps& maps, const ClassSchema& schema,
                               const DecodeOptions& options) {
  options.nms.validate();
  const double floor = std::min(options.nms.body_conf, options.nms.part_conf);
  const auto dets = decode_boxes(maps, schema, floor);

  std::vector<Detection> bodies, parts;
  for (const auto& d : dets) (schema.is_part(d.cls) ? parts : bodies).push_back(d);

  PipelineResult out;
  out.bodies = nms(bodies, options.nms, schema);
  out.parts = nms(parts, options.nms, schema);
  const CapacityTable capacity =
      options.capacity.size() == 0 ? CapacityTable::defaults(schema) : options.capacity;
  out.association = greedy_match(out.bodies, out.parts, capacity, options.enclosure, options.matcher);
  return out;
}

}  // namespace bodylink
