// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "bodylink/errors.hpp"

namespace bodylink {
namespace {

double power(double base, double exponent) noexcept {
  if (exponent == 0.0) return 1.0;
  return std::pow(base, exponent);
}

// Ordering inside one object's list: higher t, higher u, lower anchor index.
bool ranks_before(const SelectedAnchor& a, const SelectedAnchor& b) noexcept {
  if (a.t != b.t) return a.t > b.t;
  if (a.u != b.u) return a.u > b.u;
  return a.anchor_index < b.anchor_index;
}

void check_geometry(const DenseMaps& predictions, const DenseTargetMaps& targets) {
  const auto p = predictions.feature_levels();
  const auto t = targets.feature_levels();
  if (p.size() != t.size())
    throw ValidationError("prediction and target pyramids have different level counts");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] == t[i]))
      throw ValidationError("level " + std::to_string(i) + " geometry differs between predictions and targets");
  for (const auto& o : targets.objects)
    if (o.cls.value < 1 || o.cls.value > predictions.num_classes())
      throw ValidationError("target class " + std::to_string(o.cls.value) +
                            " exceeds prediction class count");
}

}  // namespace

void AlignmentConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ValidationError("alpha and beta must be >= 0");
  if (k < 1) throw ValidationError("top-K must be >= 1");
}

double alignment_metric(double s, double u, const AlignmentConfig& cfg) noexcept {
  return power(s, cfg.alpha) * power(u, cfg.beta);
}

std::size_t AssignmentResult::total_selected() const noexcept {
  std::size_t n = 0;
  for (const auto& v : per_object) n += v.size();
  return n;
}

AssignmentResult assign(const DenseMaps& predictions, const DenseTargetMaps& targets,
                        const AlignmentConfig& cfg) {
  cfg.validate();
  validate_maps(predictions);
  check_geometry(predictions, targets);
  const AnchorLayout layout = predictions.layout();

  AssignmentResult out;
  out.k = cfg.k;
  out.num_anchors = layout.size();
  out.per_object.resize(targets.objects.size());

  for (std::size_t g = 0; g < targets.objects.size(); ++g) {
    const auto& obj = targets.objects[g];
    auto& list = out.per_object[g];
    list.reserve(targets.candidates[g].size());
    for (const auto& cand : targets.candidates[g]) {
      const auto& lm = predictions.levels[static_cast<std::size_t>(cand.anchor.level)];
      const auto ci = lm.level.cell_index(cand.anchor.cell);
      SelectedAnchor sa;
      sa.anchor = cand.anchor;
      sa.anchor_index = layout.index(cand.anchor);
      sa.object = g;
      sa.s = sigmoid(lm.cls_at(obj.cls.channel(), ci));
      sa.u = iou(decode_box(lm.level, cand.anchor.cell, side_offsets(lm, ci)), obj.box);
      sa.t = alignment_metric(sa.s, sa.u, cfg);
      list.push_back(sa);
    }
    const auto keep = cfg.top_k ? std::min(list.size(), static_cast<std::size_t>(cfg.k)) : list.size();
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(),
                      ranks_before);
    list.resize(keep);
  }

  // Conflict resolution over anchors claimed more than once.
  std::unordered_map<std::size_t, std::vector<const SelectedAnchor*>> claims;
  for (const auto& list : out.per_object)
    for (const auto& sa : list) claims[sa.anchor_index].push_back(&sa);

  std::vector<std::vector<std::size_t>> drop(out.per_object.size());
  std::vector<std::size_t> contested;
  for (const auto& [idx, who] : claims)
    if (who.size() > 1) contested.push_back(idx);
  std::sort(contested.begin(), contested.end());
  for (const auto idx : contested) {
    const auto& who = claims[idx];
    const SelectedAnchor* best = who.front();
    for (const auto* c : who) {
      if (c->t != best->t ? c->t > best->t
                          : (c->u != best->u ? c->u > best->u : c->object < best->object))
        best = c;
    }
    AssignmentConflict conflict{best->anchor, idx, best->object, {}};
    for (const auto* c : who) {
      if (c == best) continue;
      conflict.losers.push_back(c->object);
      drop[c->object].push_back(idx);
    }
    std::sort(conflict.losers.begin(), conflict.losers.end());
    out.conflicts.push_back(std::move(conflict));
  }
  for (std::size_t g = 0; g < out.per_object.size(); ++g) {
    if (drop[g].empty()) continue;
    auto& list = out.per_object[g];
    std::erase_if(list, [&](const SelectedAnchor& sa) {
      return std::find(drop[g].begin(), drop[g].end(), sa.anchor_index) != drop[g].end();
    });
  }
  return out;
}

ClsTargets normalized_cls_target(const AssignmentResult& assignment,
                                 const DenseTargetMaps& targets) {
  ClsTargets out;
  out.value.assign(assignment.num_anchors, 0.0);
  out.class_id.assign(assignment.num_anchors, 0);
  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    const auto& list = assignment.per_object[g];
    double max_t = 0.0, max_u = 0.0;
    for (const auto& sa : list) {
      max_t = std::max(max_t, sa.t);
      max_u = std::max(max_u, sa.u);
    }
    for (const auto& sa : list) {
      out.class_id[sa.anchor_index] = targets.objects[g].cls.value;
      out.value[sa.anchor_index] = max_t > 0.0 ? sa.t / max_t * max_u : 0.0;
    }
  }
  return out;
}

}  // namespace bodylink
