// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace bodylink::oracle {

double box_iou(const BBox& a, const BBox& b) {
  const double ox = std::max(0.0, std::min(a.x_r, b.x_r) - std::max(a.x_l, b.x_l));
  const double oy = std::max(0.0, std::min(a.y_b, b.y_b) - std::max(a.y_t, b.y_t));
  const double inter = ox * oy;
  if (inter == 0.0) return 0.0;
  const double area_a = (a.x_r - a.x_l) * (a.y_b - a.y_t);
  const double area_b = (b.x_r - b.x_l) * (b.y_b - b.y_t);
  return inter / (area_a + area_b - inter);
}

std::vector<Detection> nms(std::span<const Detection> dets, const NmsConfig& cfg,
                           const ClassSchema& schema) {
  std::vector<bool> used(dets.size(), false);
  std::vector<Detection> kept;
  for (;;) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (used[i]) continue;
      if (!best) {
        best = i;
        continue;
      }
      const auto& a = dets[i];
      const auto& b = dets[*best];
      if (a.score > b.score || (a.score == b.score && a.anchor_index < b.anchor_index)) best = i;
    }
    if (!best) break;
    used[*best] = true;
    const Detection& d = dets[*best];
    const bool part = schema.kind(d.cls) == ClassKind::part;
    if (d.score < (part ? cfg.part_conf : cfg.body_conf)) continue;
    const double thr = part ? cfg.part_iou : cfg.body_iou;
    bool suppressed = false;
    for (const auto& k : kept)
      if (k.cls == d.cls && box_iou(k.box, d.box) > thr) suppressed = true;
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double pow0(double base, double e) { return e == 0.0 ? 1.0 : std::pow(base, e); }

struct Scored {
  std::size_t anchor = 0;
  double t = 0.0;
  double u = 0.0;
};

}  // namespace

ReferenceAssignment assign(const DenseMaps& predictions, const SceneAnnotation& scene,
                           const AlignmentConfig& cfg) {
  if (predictions.dfl_bins() != 0) throw std::invalid_argument("oracle handles direct offsets only");
  const std::size_t g_count = scene.objects.size();
  std::vector<std::vector<Scored>> lists(g_count);
  std::size_t base = 0;
  for (const auto& lm : predictions.levels) {
    const double s = lm.level.stride;
    for (int y = 0; y < lm.level.height; ++y) {
      for (int x = 0; x < lm.level.width; ++x) {
        const std::size_t ci = static_cast<std::size_t>(y) * static_cast<std::size_t>(lm.level.width) +
                               static_cast<std::size_t>(x);
        const BBox pred{s * (x - lm.box[0 * lm.plane() + ci]), s * (y - lm.box[1 * lm.plane() + ci]),
                        s * (x + lm.box[2 * lm.plane() + ci]), s * (y + lm.box[3 * lm.plane() + ci])};
        for (std::size_t g = 0; g < g_count; ++g) {
          // Boxes are clamped to the image before anything else.
          const BBox& raw = scene.objects[g].box;
          const double w = scene.width, h = scene.height;
          const BBox b{std::min(std::max(raw.x_l, 0.0), w), std::min(std::max(raw.y_t, 0.0), h),
                       std::min(std::max(raw.x_r, 0.0), w), std::min(std::max(raw.y_b, 0.0), h)};
          const bool inside = x >= std::floor(b.x_l / s) && x <= std::floor(b.x_r / s) &&
                              y >= std::floor(b.y_t / s) && y <= std::floor(b.y_b / s);
          if (!inside) continue;
          const int ch = scene.objects[g].cls.value - 1;
          const double sc = logistic(lm.cls[static_cast<std::size_t>(ch) * lm.plane() + ci]);
          const double u = box_iou(pred, b);
          lists[g].push_back({base + ci, pow0(sc, cfg.alpha) * pow0(u, cfg.beta), u});
        }
      }
    }
    base += lm.plane();
  }
  for (auto& l : lists) {
    std::sort(l.begin(), l.end(), [](const Scored& a, const Scored& b) {
      return std::tie(b.t, b.u, a.anchor) < std::tie(a.t, a.u, b.anchor);
    });
    if (cfg.top_k && l.size() > static_cast<std::size_t>(cfg.k)) l.resize(static_cast<std::size_t>(cfg.k));
  }
  // anchor -> (object, t, u) of every claimant
  std::map<std::size_t, std::vector<std::tuple<std::size_t, double, double>>> claims;
  for (std::size_t g = 0; g < g_count; ++g)
    for (const auto& e : lists[g]) claims[e.anchor].emplace_back(g, e.t, e.u);
  ReferenceAssignment out;
  out.per_object.resize(g_count);
  out.t.resize(g_count);
  for (std::size_t g = 0; g < g_count; ++g) {
    for (const auto& e : lists[g]) {
      bool wins = true;
      for (const auto& [h, t, u] : claims[e.anchor]) {
        if (h == g) continue;
        const bool other_better = t > e.t || (t == e.t && (u > e.u || (u == e.u && h < g)));
        if (other_better) wins = false;
      }
      if (!wins) continue;
      out.per_object[g].push_back(e.anchor);
      out.t[g].push_back(e.t);
    }
  }
  return out;
}

AssociationResult match(std::span<const Detection> bodies, std::span<const Detection> parts,
                        const CapacityTable& capacity, Enclosure mode, bool use_predicted_center) {
  // Processing order: descending score, ties by lower index.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < parts.size(); ++i) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return parts[a].score != parts[b].score ? parts[a].score > parts[b].score : a < b;
  });

  auto encloses = [&](std::size_t b, std::size_t p) {
    const BBox& o = bodies[b].box;
    const BBox& q = parts[p].box;
    if (mode == Enclosure::full)
      return q.x_l >= o.x_l && q.x_r <= o.x_r && q.y_t >= o.y_t && q.y_b <= o.y_b;
    const double cx = (q.x_l + q.x_r) / 2.0, cy = (q.y_t + q.y_b) / 2.0;
    return cx >= o.x_l && cx <= o.x_r && cy >= o.y_t && cy <= o.y_b;
  };
  auto dist = [&](std::size_t b, std::size_t p) {
    const BBox& o = bodies[b].box;
    const BBox& q = parts[p].box;
    double qx = (q.x_l + q.x_r) / 2.0, qy = (q.y_t + q.y_b) / 2.0;
    if (use_predicted_center) {
      qx = parts[p].body_center->x;
      qy = parts[p].body_center->y;
    }
    return std::hypot(qx - (o.x_l + o.x_r) / 2.0, qy - (o.y_t + o.y_b) / 2.0);
  };

  using Key = std::tuple<int, double, double, std::size_t>;  // unmatched, distance, area, body
  const std::size_t none = bodies.size();
  std::vector<std::size_t> choice(parts.size(), none), best_choice;
  std::vector<Key> key(parts.size()), best_key;
  const double inf = std::numeric_limits<double>::infinity();

  // Enumerate every choice in processing order; check capacity at the leaves.
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    if (depth == order.size()) {
      std::map<std::pair<std::size_t, int>, int> used;
      for (std::size_t p = 0; p < parts.size(); ++p)
        if (choice[p] != none) ++used[{choice[p], parts[p].cls.value}];
      for (const auto& [bc, n] : used)
        if (n > capacity[ClassId{bc.second}]) return;
      if (best_choice.empty() || key < best_key) {
        best_key = key;
        best_choice = choice;
      }
      return;
    }
    const std::size_t p = order[depth];
    for (std::size_t b = 0; b <= none; ++b) {
      if (b != none && !encloses(b, p)) continue;
      choice[p] = b;
      key[depth] = b == none ? Key{1, inf, inf, none}
                             : Key{0, dist(b, p), bodies[b].box.area(), b};
      rec(depth + 1);
    }
    choice[p] = none;
  };
  rec(0);

  AssociationResult out;
  for (const std::size_t p : order) {
    const std::size_t b = best_choice.empty() ? none : best_choice[p];
    if (b != none) {
      out.matches.push_back({p, b, dist(b, p)});
      continue;
    }
    bool any = false;
    for (std::size_t c = 0; c < bodies.size(); ++c) any = any || encloses(c, p);
    out.unmatched.push_back(
        {p, any ? UnmatchedReason::capacity_exhausted : UnmatchedReason::no_enclosing_body});
  }
  return out;
}

double ranked_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  std::vector<double> precision(ranked_tp.size());
  double tp = 0.0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    tp += ranked_tp[i] ? 1.0 : 0.0;
    precision[i] = tp / static_cast<double>(i + 1);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    if (!ranked_tp[i]) continue;
    double best = 0.0;
    for (std::size_t j = i; j < ranked_tp.size(); ++j) best = std::max(best, precision[j]);
    sum += best;
  }
  return sum / static_cast<double>(num_gt);
}

double central_difference(const std::function<double()>& f, double* x, double h) {
  const double keep = *x;
  *x = keep + h;
  const double plus = f();
  *x = keep - h;
  const double minus = f();
  *x = keep;
  return (plus - minus) / (2.0 * h);
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace bodylink::oracle
