// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bodylink/errors.hpp"

namespace bodylink {
namespace {

double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Derivatives of one axis of the GIoU terms with respect to the predicted
// low/high coordinates.
struct AxisTerms {
  double extent;          // max(0, hi - lo)
  double d_extent[2];     // d/d lo, d/d hi
  double overlap;         // max(0, min(hi, ghi) - max(lo, glo))
  double d_overlap[2];
  double hull;            // max(hi, ghi) - min(lo, glo)
  double d_hull[2];
};

AxisTerms axis_terms(double lo, double hi, double glo, double ghi) noexcept {
  AxisTerms a{};
  const double w = hi - lo;
  a.extent = std::max(0.0, w);
  a.d_extent[0] = w > 0.0 ? -1.0 : 0.0;
  a.d_extent[1] = w > 0.0 ? 1.0 : 0.0;
  const double ov = std::min(hi, ghi) - std::max(lo, glo);
  a.overlap = std::max(0.0, ov);
  if (ov > 0.0) {
    a.d_overlap[0] = lo > glo ? -1.0 : 0.0;
    a.d_overlap[1] = hi < ghi ? 1.0 : 0.0;
  }
  a.hull = std::max(hi, ghi) - std::min(lo, glo);
  a.d_hull[0] = lo < glo ? -1.0 : 0.0;
  a.d_hull[1] = hi > ghi ? 1.0 : 0.0;
  return a;
}

void check_same_levels(const DenseMaps& pred, const DenseTargetMaps& targets) {
  const auto a = pred.feature_levels();
  const auto b = targets.feature_levels();
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin()))
    throw ValidationError("prediction and target pyramids differ");
}

// Adds d loss / d (l, t, r, b) into the box planes of `grad` at one anchor.
void backprop_sides(const LevelMaps& pred, LevelMaps& grad, std::size_t cell,
                    const std::array<double, 4>& d_sides) {
  if (pred.dfl_bins == 0) {
    for (int side = 0; side < 4; ++side) grad.box_at(side, cell) += d_sides[side];
    return;
  }
  const int bins = pred.dfl_bins;
  std::vector<double> p(static_cast<std::size_t>(bins));
  for (int side = 0; side < 4; ++side) {
    double mx = -HUGE_VAL;
    for (int k = 0; k < bins; ++k) mx = std::max(mx, pred.box_at(side * bins + k, cell));
    double z = 0.0, mean = 0.0;
    for (int k = 0; k < bins; ++k) {
      p[static_cast<std::size_t>(k)] = std::exp(pred.box_at(side * bins + k, cell) - mx);
      z += p[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < bins; ++k) {
      p[static_cast<std::size_t>(k)] /= z;
      mean += p[static_cast<std::size_t>(k)] * k;
    }
    for (int k = 0; k < bins; ++k)
      grad.box_at(side * bins + k, cell) += d_sides[side] * p[static_cast<std::size_t>(k)] * (k - mean);
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {iou, dfl, cls, assoc})
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("loss weights must be finite and >= 0");
}

DenseMaps zeros_like(const DenseMaps& maps) {
  DenseMaps out = maps;
  for (auto& l : out.levels) {
    std::fill(l.box.begin(), l.box.end(), 0.0);
    std::fill(l.cls.begin(), l.cls.end(), 0.0);
    std::fill(l.assoc.begin(), l.assoc.end(), 0.0);
  }
  return out;
}

GiouLoss giou_loss(const BBox& pred, const BBox& gt) noexcept {
  const AxisTerms ax = axis_terms(pred.x_l, pred.x_r, gt.x_l, gt.x_r);
  const AxisTerms ay = axis_terms(pred.y_t, pred.y_b, gt.y_t, gt.y_b);

  const double area_p = ax.extent * ay.extent;
  const double area_g = gt.area();
  const double inter = ax.overlap * ay.overlap;
  const double uni = area_p + area_g - inter;
  const double hull = ax.hull * ay.hull;

  GiouLoss out;
  out.value = 2.0 - inter / uni - uni / hull;

  // Corner order: x_l, y_t, x_r, y_b -> (axis, end) = (x,0), (y,0), (x,1), (y,1).
  for (int c = 0; c < 4; ++c) {
    const bool is_x = (c % 2) == 0;
    const int end = c / 2;
    const AxisTerms& a = is_x ? ax : ay;
    const AxisTerms& o = is_x ? ay : ax;
    const double d_area_p = a.d_extent[end] * o.extent;
    const double d_inter = a.d_overlap[end] * o.overlap;
    const double d_uni = d_area_p - d_inter;
    const double d_hull = a.d_hull[end] * o.hull;
    out.grad[static_cast<std::size_t>(c)] = -(d_inter * uni - inter * d_uni) / (uni * uni) -
                                            (d_uni * hull - uni * d_hull) / (hull * hull);
  }
  return out;
}

DflBracket dfl_bracket(double target, int bins) noexcept {
  DflBracket b;
  const double hi = static_cast<double>(bins - 1);
  double y = target;
  if (y < 0.0 || y > hi) {
    b.clamped = true;
    y = std::clamp(y, 0.0, hi);
  }
  int left = static_cast<int>(std::floor(y));
  if (left >= bins - 1) left = bins - 2;
  b.left = left;
  b.w_left = static_cast<double>(left + 1) - y;
  b.w_right = y - static_cast<double>(left);
  return b;
}

double dfl_side_loss(std::span<const double> logits, double target, std::span<double> grad,
                     bool* clamped) {
  const int bins = static_cast<int>(logits.size());
  const DflBracket b = dfl_bracket(target, bins);
  if (clamped) *clamped = b.clamped;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  const auto l = static_cast<std::size_t>(b.left);
  const double loss = -(b.w_left * (logits[l] - log_z) + b.w_right * (logits[l + 1] - log_z));
  const double w_sum = b.w_left + b.w_right;
  for (std::size_t k = 0; k < logits.size(); ++k) grad[k] = w_sum * std::exp(logits[k] - log_z);
  grad[l] -= b.w_left;
  grad[l + 1] -= b.w_right;
  return loss;
}

double bce_with_logits(double z, double y) noexcept {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double bce_with_logits_grad(double z, double y) noexcept { return sigmoid(z) - y; }

LossTerm assoc_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                    const AssignmentResult& assignment, double lambda, const ClassSchema& schema) {
  check_same_levels(pred, targets);
  if (pred.assoc_mode != AssocMode::per_level_stride)
    throw ValidationError("association loss needs per-level-stride offsets");
  LossTerm out;
  out.grad = zeros_like(pred);
  const std::size_t parts = targets.num_parts(schema);
  if (parts == 0) return out;
  const double norm = 1.0 / (static_cast<double>(assignment.k) * static_cast<double>(parts));

  double sum = 0.0;
  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    const auto& obj = targets.objects[g];
    if (!schema.is_part(obj.cls)) continue;
    const Point body_c = center(targets.objects[*obj.parent].box);
    for (const auto& sa : assignment.per_object[g]) {
      const auto li = static_cast<std::size_t>(sa.anchor.level);
      const auto& lm = pred.levels[li];
      const auto ci = lm.level.cell_index(sa.anchor.cell);
      const int s = lm.level.stride;
      const double rx = floor_div(body_c.x, s) - (sa.anchor.cell.x + lambda * lm.assoc_at(0, ci));
      const double ry = floor_div(body_c.y, s) - (sa.anchor.cell.y + lambda * lm.assoc_at(1, ci));
      sum += 0.5 * (std::abs(rx) + std::abs(ry));
      auto& gl = out.grad.levels[li];
      gl.assoc_at(0, ci) += -0.5 * lambda * sign(rx) * norm;
      gl.assoc_at(1, ci) += -0.5 * lambda * sign(ry) * norm;
    }
  }
  out.value = sum * norm;
  return out;
}

LossTerm iou_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                  const AssignmentResult& assignment) {
  check_same_levels(pred, targets);
  LossTerm out;
  out.grad = zeros_like(pred);
  const std::size_t m = assignment.total_selected();
  if (m == 0) return out;
  const double norm = 1.0 / static_cast<double>(m);

  double sum = 0.0;
  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    const BBox& gt = targets.objects[g].box;
    for (const auto& sa : assignment.per_object[g]) {
      const auto li = static_cast<std::size_t>(sa.anchor.level);
      const auto& lm = pred.levels[li];
      const auto ci = lm.level.cell_index(sa.anchor.cell);
      const BBox box = decode_box(lm.level, sa.anchor.cell, side_offsets(lm, ci));
      const GiouLoss gl = giou_loss(box, gt);
      sum += gl.value;
      const double s = lm.level.stride;
      const std::array<double, 4> d_sides{-s * gl.grad[0] * norm, -s * gl.grad[1] * norm,
                                          s * gl.grad[2] * norm, s * gl.grad[3] * norm};
      backprop_sides(lm, out.grad.levels[li], ci, d_sides);
    }
  }
  out.value = sum * norm;
  return out;
}

LossTerm dfl_loss(const DenseMaps& pred, const DenseTargetMaps& targets,
                  const AssignmentResult& assignment, const DflConfig& cfg) {
  check_same_levels(pred, targets);
  if (cfg.bins < 2) throw ValidationError("DFL needs at least 2 bins");
  if (pred.dfl_bins() != cfg.bins)
    throw ValidationError("prediction maps carry " + std::to_string(pred.dfl_bins()) +
                          " DFL bins, expected " + std::to_string(cfg.bins));
  LossTerm out;
  out.grad = zeros_like(pred);
  const std::size_t m = assignment.total_selected();
  if (m == 0) return out;
  const double norm = 1.0 / (4.0 * static_cast<double>(m));
  const auto bins = static_cast<std::size_t>(cfg.bins);
  std::vector<double> logits(bins), grad(bins);

  double sum = 0.0;
  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    const BBox& gt = targets.objects[g].box;
    for (const auto& sa : assignment.per_object[g]) {
      const auto li = static_cast<std::size_t>(sa.anchor.level);
      const auto& lm = pred.levels[li];
      auto& gl = out.grad.levels[li];
      const auto ci = lm.level.cell_index(sa.anchor.cell);
      const auto target = encode_box_offsets(gt, sa.anchor.cell, lm.level);
      for (int side = 0; side < 4; ++side) {
        for (std::size_t k = 0; k < bins; ++k)
          logits[k] = lm.box_at(side * cfg.bins + static_cast<int>(k), ci);
        bool clamped = false;
        sum += dfl_side_loss(logits, target[static_cast<std::size_t>(side)], grad, &clamped);
        if (clamped) ++out.clamped_targets;
        for (std::size_t k = 0; k < bins; ++k)
          gl.box_at(side * cfg.bins + static_cast<int>(k), ci) += grad[k] * norm;
      }
    }
  }
  out.value = sum * norm;
  return out;
}

LossTerm cls_loss(const DenseMaps& pred, const ClsTargets& targets) {
  const AnchorLayout layout = pred.layout();
  if (targets.value.size() != layout.size() || targets.class_id.size() != layout.size())
    throw ValidationError("classification targets do not match the anchor count");
  LossTerm out;
  out.grad = zeros_like(pred);
  const int n_cls = pred.num_classes();
  const double count = static_cast<double>(layout.size()) * n_cls;
  if (count == 0) return out;
  const double norm = 1.0 / count;

  double sum = 0.0;
  std::size_t offset = 0;
  for (std::size_t li = 0; li < pred.levels.size(); ++li) {
    const auto& lm = pred.levels[li];
    auto& gl = out.grad.levels[li];
    for (std::size_t ci = 0; ci < lm.plane(); ++ci) {
      const int cls_id = targets.class_id[offset + ci];
      const double tv = targets.value[offset + ci];
      for (int ch = 0; ch < n_cls; ++ch) {
        const double y = (cls_id == ch + 1) ? tv : 0.0;
        const double z = lm.cls_at(ch, ci);
        sum += bce_with_logits(z, y);
        gl.cls_at(ch, ci) = bce_with_logits_grad(z, y) * norm;
      }
    }
    offset += lm.plane();
  }
  out.value = sum * norm;
  return out;
}

LossReport total_loss(const LossTerm& iou, const LossTerm& dfl, const LossTerm& cls,
                      const LossTerm& assoc, const LossWeights& w) {
  w.validate();
  LossReport r;
  r.iou = iou.value;
  r.dfl = dfl.value;
  r.cls = cls.value;
  r.assoc = assoc.value;
  r.total = w.iou * iou.value + w.dfl * dfl.value + w.cls * cls.value + w.assoc * assoc.value;
  r.dfl_clamped = dfl.clamped_targets;

  const LossTerm* terms[] = {&iou, &dfl, &cls, &assoc};
  const double weights[] = {w.iou, w.dfl, w.cls, w.assoc};
  const DenseMaps* shape = nullptr;
  for (const auto* t : terms)
    if (!t->grad.levels.empty()) shape = &t->grad;
  if (!shape) return r;
  r.grad = zeros_like(*shape);
  for (std::size_t i = 0; i < 4; ++i) {
    if (terms[i]->grad.levels.empty()) continue;
    for (std::size_t li = 0; li < r.grad.levels.size(); ++li) {
      auto& dst = r.grad.levels[li];
      const auto& src = terms[i]->grad.levels[li];
      for (std::size_t j = 0; j < dst.box.size(); ++j) dst.box[j] += weights[i] * src.box[j];
      for (std::size_t j = 0; j < dst.cls.size(); ++j) dst.cls[j] += weights[i] * src.cls[j];
      for (std::size_t j = 0; j < dst.assoc.size(); ++j) dst.assoc[j] += weights[i] * src.assoc[j];
    }
  }
  return r;
}

LossReport compute_losses(const DenseMaps& pred, const DenseTargetMaps& targets,
                          const AssignmentResult& assignment, const ClassSchema& schema,
                          const LossWeights& weights) {
  const LossTerm li = iou_loss(pred, targets, assignment);
  const LossTerm ld = pred.dfl_bins() > 0
                          ? dfl_loss(pred, targets, assignment, DflConfig{pred.dfl_bins()})
                          : LossTerm{};
  const LossTerm lc = cls_loss(pred, normalized_cls_target(assignment, targets));
  const LossTerm la = assoc_loss(pred, targets, assignment, pred.lambda, schema);
  return total_loss(li, ld, lc, la, weights);
}

}  // namespace bodylink
