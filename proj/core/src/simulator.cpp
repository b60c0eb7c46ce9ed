// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "bodylink/errors.hpp"
#include "bodylink/random.hpp"

namespace bodylink {
namespace {

constexpr double kAbsentLogit = -30.0;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double snap(double v, double grid) { return grid > 0.0 ? std::round(v / grid) * grid : v; }

BBox snap_box(const BBox& b, double grid) {
  if (grid <= 0.0) return b;
  BBox out{snap(b.x_l, grid), snap(b.y_t, grid), snap(b.x_r, grid), snap(b.y_b, grid)};
  if (out.x_r <= out.x_l) out.x_r = out.x_l + grid;
  if (out.y_b <= out.y_t) out.y_b = out.y_t + grid;
  return out;
}

BBox box_at(double cx, double cy, double w, double h) {
  return {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
}

bool inside_image(const BBox& b, int width, int height) {
  return b.x_l >= 0.0 && b.y_t >= 0.0 && b.x_r <= width && b.y_b <= height;
}

bool box_inside(const BBox& outer, const BBox& inner) {
  return inner.x_l >= outer.x_l && inner.y_t >= outer.y_t && inner.x_r <= outer.x_r &&
         inner.y_b <= outer.y_b;
}

// Horizontal displacement from `anchor` at which a w x h box reaches the
// requested IoU; nullopt when even full horizontal overlap falls short.
std::optional<double> offset_for_iou(const BBox& anchor, double cy, double w, double h,
                                     double target) {
  const double ax = center(anchor).x;
  auto f = [&](double dx) { return iou(anchor, box_at(ax + dx, cy, w, h)); };
  double lo = 0.0, hi = (anchor.width() + w) / 2.0;
  if (f(lo) < target) return std::nullopt;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= target ? lo : hi) = mid;
  }
  return lo;
}

// Cells a box reaches at the finest stride: its floored box, closed on the right.
constexpr double kFinestStride = 8.0;

BBox cell_footprint(const BBox& b) {
  const double s = kFinestStride;
  return {std::floor(b.x_l / s) * s, std::floor(b.y_t / s) * s, (std::floor(b.x_r / s) + 1.0) * s,
          (std::floor(b.y_b / s) + 1.0) * s};
}

// Share of `boxes[i]` outside the cell footprint of every box that would
// claim its cells, i.e. a smaller one (ties: lower index). Sampled on a
// 16 x 16 lattice.
double free_fraction(std::span<const BBox> boxes, std::size_t i) {
  const BBox& b = boxes[i];
  std::vector<BBox> rivals;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (j == i) continue;
    const BBox foot = cell_footprint(boxes[j]);
    if (foot.x_r <= b.x_l || b.x_r <= foot.x_l || foot.y_b <= b.y_t || b.y_b <= foot.y_t) continue;
    const double aj = boxes[j].area(), ai = b.area();
    if (aj < ai || (aj == ai && j < i)) rivals.push_back(foot);
  }
  if (rivals.empty()) return 1.0;
  constexpr int kSamples = 16;
  int free = 0;
  for (int y = 0; y < kSamples; ++y) {
    for (int x = 0; x < kSamples; ++x) {
      const Point p{b.x_l + (x + 0.5) * b.width() / kSamples, b.y_t + (y + 0.5) * b.height() / kSamples};
      const bool covered = std::any_of(rivals.begin(), rivals.end(), [&](const BBox& r) {
        return p.x >= r.x_l && p.x < r.x_r && p.y >= r.y_t && p.y < r.y_b;
      });
      if (!covered) ++free;
    }
  }
  return static_cast<double>(free) / (kSamples * kSamples);
}

// One cell carries one prediction, so every object needs cells of its own.
constexpr double kMinFreeFraction = 0.25;

bool all_decodable(std::span<const BBox> boxes) {
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (free_fraction(boxes, i) < kMinFreeFraction) return false;
  return true;
}

struct PlacedBody {
  BBox box;
  double full_height = 0.0;
};

std::vector<PlacedBody> place_bodies(const SceneSpec& spec, Rng& rng) {
  const int n = rng.uniform_int(spec.min_bodies, spec.max_bodies);
  const double max_overlap = spec.crowding > 0.0 ? spec.crowding + 0.02 : 0.0;
  std::vector<PlacedBody> bodies;
  for (int attempt = 0; attempt < 400 * n && static_cast<int>(bodies.size()) < n; ++attempt) {
    const double w = rng.uniform(spec.body_min_width, spec.body_max_width);
    const double full_h = w * rng.uniform(spec.body_min_aspect, spec.body_max_aspect);
    const double h = rng.bernoulli(spec.occlusion) ? full_h * rng.uniform(0.55, 0.8) : full_h;

    BBox box;
    if (bodies.empty() || spec.crowding <= 0.0) {
      const double x = rng.uniform(0.0, spec.width - w);
      const double y = rng.uniform(0.0, spec.height - h);
      box = {x, y, x + w, y + h};
    } else {
      const auto& nb = bodies[static_cast<std::size_t>(
                                  rng.uniform_int(0, static_cast<int>(bodies.size()) - 1))]
                           .box;
      const double cy = center(nb).y + rng.uniform(-0.1, 0.1) * h;
      const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const auto dx = offset_for_iou(nb, cy, w, h, spec.crowding);
      if (!dx) continue;
      box = box_at(center(nb).x + dir * *dx, cy, w, h);
    }
    box = snap_box(box, spec.grid_snap);
    if (!inside_image(box, spec.width, spec.height)) continue;

    bool ok = true;
    for (const auto& other : bodies) {
      if (distance(center(box), center(other.box)) < spec.min_center_separation ||
          iou(box, other.box) > max_overlap) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<BBox> boxes;
    for (const auto& other : bodies) boxes.push_back(other.box);
    boxes.push_back(box);
    if (all_decodable(boxes)) bodies.push_back({box, full_h});
  }
  return bodies;
}

std::optional<BBox> place_part(const PartSpec& ps, int instance, const PlacedBody& body,
                               double margin_frac, double grid, Rng& rng) {
  const BBox& b = body.box;
  const double bw = b.width();
  const double margin = margin_frac * bw;
  double lo = b.x_l + margin, hi = b.x_r - margin;
  if (ps.count > 1) {
    const double seg = (hi - lo) / ps.count;
    lo += seg * instance;
    hi = lo + seg;
  }
  const double pw = bw * rng.uniform(ps.min_size, ps.max_size);
  const double ph = pw * ps.aspect;
  const double cx = rng.uniform(lo, hi);
  const double cy = b.y_t + body.full_height * rng.uniform(ps.band_top, ps.band_bottom);
  BBox box = box_at(cx, cy, pw, ph);
  // Slide into the body when only an edge sticks out.
  if (box.x_l < b.x_l) box = box_at(b.x_l + pw / 2.0, cy, pw, ph);
  if (box.x_r > b.x_r) box = box_at(b.x_r - pw / 2.0, cy, pw, ph);
  const double ccx = center(box).x;
  if (box.y_t < b.y_t) box = box_at(ccx, b.y_t + ph / 2.0, pw, ph);
  if (box.y_b > b.y_b) box = box_at(ccx, b.y_b - ph / 2.0, pw, ph);
  box = snap_box(box, grid);

  if (!box_inside(b, box)) return std::nullopt;
  const Point c = center(box);
  if (c.x < b.x_l + margin || c.x > b.x_r - margin || c.y < b.y_t + margin ||
      c.y > b.y_b - margin)
    return std::nullopt;
  return box;
}

// Two-bin distribution whose expectation is `target`.
void write_dfl(LevelMaps& lm, std::size_t cell, int side, double target) {
  const int bins = lm.dfl_bins;
  target = std::clamp(target, 0.0, static_cast<double>(bins - 1));
  const int left = std::min(static_cast<int>(std::floor(target)), bins - 1);
  const double wr = target - left;
  for (int k = 0; k < bins; ++k) lm.box_at(side * bins + k, cell) = kAbsentLogit;
  lm.box_at(side * bins + left, cell) = wr < 1.0 ? std::log(1.0 - wr) : kAbsentLogit;
  if (left + 1 < bins && wr > 0.0) lm.box_at(side * bins + left + 1, cell) = std::log(wr);
}

void write_box(LevelMaps& lm, std::size_t cell, const std::array<double, 4>& ltrb) {
  if (lm.dfl_bins == 0) {
    for (int c = 0; c < 4; ++c) lm.box_at(c, cell) = ltrb[static_cast<std::size_t>(c)];
    return;
  }
  for (int c = 0; c < 4; ++c) write_dfl(lm, cell, c, ltrb[static_cast<std::size_t>(c)]);
}

std::array<double, 2> assoc_for(const DenseMaps& maps, const SceneAnnotation& scene,
                                std::size_t part, Cell cell, const FeatureLevel& level) {
  const Point c = center(scene.objects[*scene.objects[part].parent].box);
  if (maps.assoc_mode == AssocMode::fixed_unit)
    return encode_assoc_offset_fixed(c, cell, level, maps.lambda, maps.assoc_unit_px);
  return encode_assoc_offset(c, cell, level, maps.lambda);
}

DenseMaps blank_maps(std::span<const FeatureLevel> levels, const ClassSchema& schema,
                     double lambda, const RenderOptions& options) {
  DenseMaps maps = make_dense_maps(levels, schema.size(), options.dfl_bins, lambda,
                                   options.background_logit);
  maps.assoc_mode = options.assoc_mode;
  if (options.assoc_mode == AssocMode::fixed_unit)
    maps.assoc_unit_px =
        options.assoc_unit_px > 0.0 ? options.assoc_unit_px : static_cast<double>(levels.back().stride);
  return maps;
}

// An object whose top-K anchors were all lost to conflicts, or kept only with
// a zero target, would vanish from the rendering. A trained network still
// fires for it: on its best kept anchor if any, else on its best unclaimed
// candidate. The rendered box there is exact, so the target is 1.
void keep_every_object(AssignmentResult& assignment, ClsTargets& cls_target, const DenseMaps& oracle,
                       const DenseTargetMaps& targets, const AlignmentConfig& align) {
  const AnchorLayout layout = oracle.layout();
  std::vector<bool> claimed(layout.size(), false);
  for (const auto& list : assignment.per_object)
    for (const auto& sa : list) claimed[sa.anchor_index] = true;
  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    auto& kept = assignment.per_object[g];
    if (std::any_of(kept.begin(), kept.end(),
                    [&](const SelectedAnchor& sa) { return cls_target.value[sa.anchor_index] > 0.0; }))
      continue;
    const auto& obj = targets.objects[g];
    if (!kept.empty()) {
      cls_target.value[kept.front().anchor_index] = 1.0;
      continue;
    }
    std::optional<SelectedAnchor> best;
    for (const auto& cand : targets.candidates[g]) {
      const std::size_t idx = layout.index(cand.anchor);
      if (claimed[idx]) continue;
      const auto& lm = oracle.levels[static_cast<std::size_t>(cand.anchor.level)];
      const auto ci = lm.level.cell_index(cand.anchor.cell);
      SelectedAnchor sa;
      sa.anchor = cand.anchor;
      sa.anchor_index = idx;
      sa.object = g;
      sa.s = sigmoid(lm.cls_at(obj.cls.channel(), ci));
      sa.u = iou(decode_box(lm.level, cand.anchor.cell, side_offsets(lm, ci)), obj.box);
      sa.t = alignment_metric(sa.s, sa.u, align);
      const bool better = !best || sa.t > best->t || (sa.t == best->t && sa.u > best->u);
      if (better) best = sa;
    }
    if (!best) continue;
    claimed[best->anchor_index] = true;
    cls_target.value[best->anchor_index] = 1.0;
    cls_target.class_id[best->anchor_index] = obj.cls.value;
    kept.push_back(*best);
  }
}

// What a perfectly trained head would output if every cell predicted the
// smallest object covering it.
DenseMaps oracle_maps(const SceneAnnotation& scene, const DenseTargetMaps& targets,
                      std::span<const FeatureLevel> levels, const ClassSchema& schema,
                      double lambda, const RenderOptions& options) {
  DenseMaps maps = blank_maps(levels, schema, lambda, options);
  for (std::size_t li = 0; li < maps.levels.size(); ++li) {
    auto& lm = maps.levels[li];
    const auto& lt = targets.levels[li];
    for (std::size_t ci = 0; ci < lm.plane(); ++ci) {
      const auto owner = lt.primary_object[ci];
      if (owner < 0) continue;
      const auto g = static_cast<std::size_t>(owner);
      write_box(lm, ci, lt.box_offsets[ci]);
      lm.cls_at(scene.objects[g].cls.channel(), ci) = options.positive_logit;
      if (schema.is_part(scene.objects[g].cls)) {
        const auto a = assoc_for(maps, scene, g, lm.level.cell_at(ci), lm.level);
        lm.assoc_at(0, ci) = a[0];
        lm.assoc_at(1, ci) = a[1];
      }
    }
  }
  return maps;
}

}  // namespace

void SceneSpec::validate(const ClassSchema& schema) const {
  auto fail = [](const std::string& m) { throw ValidationError("scene spec: " + m); };
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if (min_bodies < 0 || max_bodies < min_bodies) fail("need 0 <= min_bodies <= max_bodies");
  if (!(body_min_width > 0.0) || body_max_width < body_min_width)
    fail("need 0 < body_min_width <= body_max_width");
  if (!(body_min_aspect > 0.0) || body_max_aspect < body_min_aspect)
    fail("need 0 < body_min_aspect <= body_max_aspect");
  if (body_max_width > width || body_max_width * body_max_aspect > height)
    fail("largest body does not fit the image");
  if (!(crowding >= 0.0 && crowding < 1.0)) fail("crowding must lie in [0, 1)");
  if (!(occlusion >= 0.0 && occlusion <= 1.0)) fail("occlusion must lie in [0, 1]");
  if (!(min_center_separation >= 0.0)) fail("min_center_separation must be non-negative");
  if (!(part_margin >= 0.0 && part_margin < 0.5)) fail("part_margin must lie in [0, 0.5)");
  if (!(grid_snap >= 0.0)) fail("grid_snap must be non-negative");
  for (const auto& p : parts) {
    if (!schema.contains(p.cls) || !schema.is_part(p.cls))
      fail("part spec class " + std::to_string(p.cls.value) + " is not a part class");
    if (!(p.probability >= 0.0 && p.probability <= 1.0)) fail("part probability must lie in [0, 1]");
    if (p.count < 1) fail("part count must be at least 1");
    if (!(p.min_size > 0.0) || p.max_size < p.min_size)
      fail("need 0 < min_size <= max_size for part sizes");
    if (p.max_size >= 1.0) fail("parts must be smaller than their body");
    if (!(p.aspect > 0.0)) fail("part aspect must be positive");
    if (p.max_size * p.aspect > body_min_aspect)
      fail("parts taller than the shortest body");
    if (!(p.band_top >= 0.0 && p.band_top <= p.band_bottom && p.band_bottom <= 1.0))
      fail("part band must satisfy 0 <= top <= bottom <= 1");
  }
}

SceneSpec SceneSpec::defaults_for(const ClassSchema& schema) {
  SceneSpec spec;
  for (const auto& id : schema.part_classes()) {
    const std::string name = lower(schema.info(id).name);
    PartSpec p;
    p.cls = id;
    if (name == "hand" || name == "hands") {
      p = {id, 0.9, 2, 0.2, 0.3, 1.0, 0.35, 0.6};
    } else if (name == "lefthand" || name == "righthand") {
      p = {id, 0.85, 1, 0.2, 0.3, 1.0, 0.35, 0.6};
    } else if (name == "head") {
      p = {id, 0.95, 1, 0.35, 0.45, 1.1, 0.08, 0.14};
    } else if (name == "face") {
      p = {id, 0.8, 1, 0.25, 0.35, 1.2, 0.08, 0.14};
    } else if (name == "foot" || name == "feet") {
      p = {id, 0.8, 2, 0.18, 0.25, 0.7, 0.9, 0.97};
    } else if (name == "leftfoot" || name == "rightfoot") {
      p = {id, 0.8, 1, 0.18, 0.25, 0.7, 0.9, 0.97};
    } else {
      p = {id, 0.8, 1, 0.2, 0.3, 1.0, 0.2, 0.8};
    }
    spec.parts.push_back(p);
  }
  return spec;
}

void NoiseSpec::validate() const {
  for (double v : {box_sigma, assoc_sigma, cls_sigma})
    if (!(v >= 0.0)) throw ValidationError("noise sigmas must be non-negative");
  for (double v : {false_positive_rate, drop_rate})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("noise rates must lie in [0, 1]");
}

SceneAnnotation generate_scene(const SceneSpec& spec, const ClassSchema& schema,
                               std::int64_t image_id) {
  spec.validate(schema);
  Rng rng(spec.seed);
  SceneAnnotation scene;
  scene.image_id = image_id;
  scene.width = spec.width;
  scene.height = spec.height;

  const auto bodies = place_bodies(spec, rng);
  for (const auto& b : bodies) scene.objects.push_back({b.box, schema.body_class(), {}, {}});

  // Same-class parts stay well apart so that they survive suppression as
  // separate detections; parts of different classes may nest but never
  // coincide, since one cell carries a single prediction.
  constexpr double kMaxSameClassOverlap = 0.3;
  constexpr double kMaxCrossClassOverlap = 0.7;
  for (std::size_t bi = 0; bi < bodies.size(); ++bi) {
    for (const auto& ps : spec.parts) {
      for (int inst = 0; inst < ps.count; ++inst) {
        if (!rng.bernoulli(ps.probability)) continue;
        for (int attempt = 0; attempt < 20; ++attempt) {
          const auto box = place_part(ps, inst, bodies[bi], spec.part_margin, spec.grid_snap, rng);
          if (!box) continue;
          const bool clash = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const auto& o) {
            if (!schema.is_part(o.cls)) return false;
            const double v = iou(o.box, *box);
            return v > (o.cls == ps.cls ? kMaxSameClassOverlap : kMaxCrossClassOverlap);
          });
          if (clash) continue;
          std::vector<BBox> boxes;
          for (const auto& o : scene.objects) boxes.push_back(o.box);
          boxes.push_back(*box);
          if (!all_decodable(boxes)) continue;
          scene.objects.push_back({*box, ps.cls, bi, {}});
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    scene.objects[i].source_id = static_cast<std::int64_t>(i + 1);
  return scene;
}

std::vector<SceneAnnotation> generate_corpus(const SceneSpec& spec, const ClassSchema& schema,
                                             int count) {
  if (count < 0) throw ValidationError("corpus size must be non-negative");
  std::vector<SceneAnnotation> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SceneSpec s = spec;
    s.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
    out.push_back(generate_scene(s, schema, i + 1));
  }
  return out;
}

Rendering render_predictions(const SceneAnnotation& scene, std::span<const FeatureLevel> levels,
                             double lambda, const NoiseSpec& noise, const ClassSchema& schema,
                             const RenderOptions& options) {
  noise.validate();
  options.alignment.validate();
  if (options.dfl_bins == 1 || options.dfl_bins < 0)
    throw ValidationError("DFL rendering needs at least 2 bins");
  const DenseTargetMaps targets = encode_scene(scene, levels, lambda, schema);
  const DenseMaps oracle = oracle_maps(scene, targets, levels, schema, lambda, options);

  AlignmentConfig align = options.alignment;
  align.top_k = options.positives == PositiveSet::aligned_top_k;
  AssignmentResult assignment = assign(oracle, targets, align);
  ClsTargets cls_target = normalized_cls_target(assignment, targets);
  keep_every_object(assignment, cls_target, oracle, targets, align);

  Rendering out;
  out.maps = blank_maps(levels, schema, lambda, options);
  const AnchorLayout layout = out.maps.layout();
  out.anchor_owner.assign(layout.size(), -1);

  Rng rng(noise.seed);
  const double cap = options.positive_logit;
  const double assoc_sd = noise.assoc_sigma / lambda;

  for (std::size_t g = 0; g < assignment.per_object.size(); ++g) {
    if (rng.bernoulli(noise.drop_rate)) continue;
    const auto& obj = targets.objects[g];
    const bool part = schema.is_part(obj.cls);
    for (const auto& sa : assignment.per_object[g]) {
      auto& lm = out.maps.levels[static_cast<std::size_t>(sa.anchor.level)];
      const auto ci = lm.level.cell_index(sa.anchor.cell);
      out.anchor_owner[sa.anchor_index] = static_cast<std::int32_t>(g);
      auto ltrb = encode_box_offsets(obj.box, sa.anchor.cell, lm.level);
      if (noise.box_sigma > 0.0)
        for (auto& v : ltrb) v += rng.normal(0.0, noise.box_sigma);
      write_box(lm, ci, ltrb);
      const double score = cls_target.value[sa.anchor_index];
      lm.cls_at(obj.cls.channel(), ci) = score > 0.0 ? std::min(cap, logit(score)) : options.background_logit;
      if (part) {
        auto a = assoc_for(out.maps, scene, g, sa.anchor.cell, lm.level);
        if (assoc_sd > 0.0) {
          a[0] += rng.normal(0.0, assoc_sd);
          a[1] += rng.normal(0.0, assoc_sd);
        }
        lm.assoc_at(0, ci) = a[0];
        lm.assoc_at(1, ci) = a[1];
      }
    }
  }

  // Spurious detections on background cells.
  if (noise.false_positive_rate > 0.0) {
    const int n_levels = static_cast<int>(out.maps.levels.size());
    for (std::size_t g = 0; g < targets.objects.size(); ++g) {
      if (!rng.bernoulli(noise.false_positive_rate)) continue;
      for (int attempt = 0; attempt < 10; ++attempt) {
        const int li = rng.uniform_int(0, n_levels - 1);
        auto& lm = out.maps.levels[static_cast<std::size_t>(li)];
        const Cell cell{rng.uniform_int(0, lm.level.width - 1), rng.uniform_int(0, lm.level.height - 1)};
        const auto idx = layout.index({li, cell});
        if (out.anchor_owner[idx] != -1) continue;
        out.anchor_owner[idx] = -2;
        const auto ci = lm.level.cell_index(cell);
        const ClassId cls{rng.uniform_int(1, schema.size())};
        std::array<double, 4> ltrb{};
        for (auto& v : ltrb) v = rng.uniform(0.5, 3.0);
        write_box(lm, ci, ltrb);
        lm.cls_at(cls.channel(), ci) = logit(rng.uniform(0.1, 0.9));
        lm.assoc_at(0, ci) = rng.uniform(-3.0, 3.0);
        lm.assoc_at(1, ci) = rng.uniform(-3.0, 3.0);
        break;
      }
    }
  }

  if (noise.cls_sigma > 0.0)
    for (auto& lm : out.maps.levels)
      for (auto& v : lm.cls) v += rng.normal(0.0, noise.cls_sigma);
  return out;
}

const AblationRow& AblationReport::row(std::string_view name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::out_of_range("no ablation row named " + std::string(name));
}

AblationReport ablation_suite(const AblationConfig& config, const ClassSchema& schema) {
  config.noise.validate();
  config.nms.validate();
  const auto levels = make_levels(config.scene.width, config.scene.height, config.strides);
  const auto corpus = generate_corpus(config.scene, schema, config.corpus_size);

  struct Variant {
    const char* name;
    PositiveSet positives;
    AssocMode assoc;
    Matcher matcher;
  };
  const Variant variants[] = {
      {"full", PositiveSet::aligned_top_k, AssocMode::per_level_stride, Matcher::predicted_center},
      {"baseline", PositiveSet::aligned_top_k, AssocMode::per_level_stride, Matcher::part_center},
      {"single_scale", PositiveSet::aligned_top_k, AssocMode::fixed_unit, Matcher::predicted_center},
      {"no_task_align", PositiveSet::all_candidates, AssocMode::per_level_stride,
       Matcher::predicted_center},
  };

  AblationReport report;
  report.seed = config.scene.seed;
  report.corpus_size = config.corpus_size;
  for (const auto& v : variants) {
    RenderOptions ro;
    ro.positives = v.positives;
    ro.assoc_mode = v.assoc;
    ro.alignment = config.alignment;
    DecodeOptions dopt;
    dopt.nms = config.nms;
    dopt.enclosure = config.enclosure;
    dopt.matcher = v.matcher;

    std::vector<EvalImage> images;
    images.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      NoiseSpec ns = config.noise;
      ns.seed = derive_seed(config.noise.seed, i);
      const auto r = render_predictions(corpus[i], levels, config.lambda, ns, schema, ro);
      images.push_back(make_eval_image(corpus[i], decode_pipeline(r.maps, schema, dopt)));
    }
    const auto metrics = evaluate(images, schema);

    AblationRow row;
    row.name = v.name;
    row.conditional_accuracy = metrics.conditional_accuracy;
    row.joint_ap = metrics.joint_ap;
    double ap_sum = 0.0, mmr_sum = 0.0;
    int ap_n = 0, mmr_n = 0;
    for (const auto& c : metrics.classes) {
      if (c.kind != ClassKind::part) continue;
      if (c.ap50) ap_sum += *c.ap50, ++ap_n;
      if (c.mmr2) mmr_sum += *c.mmr2, ++mmr_n;
    }
    if (ap_n > 0) row.part_ap = ap_sum / ap_n;
    if (mmr_n > 0) row.mmr2 = mmr_sum / mmr_n;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<double> body_overlaps(const SceneAnnotation& scene, const ClassSchema& schema) {
  std::vector<BBox> bodies;
  for (const auto& o : scene.objects)
    if (!schema.is_part(o.cls)) bodies.push_back(o.box);
  std::vector<double> out;
  for (std::size_t i = 1; i < bodies.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < i; ++j) best = std::max(best, iou(bodies[i], bodies[j]));
    out.push_back(best);
  }
  return out;
}

std::optional<double> measured_crowding(std::span<const SceneAnnotation> scenes,
                                        const ClassSchema& schema) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : scenes)
    for (double v : body_overlaps(s, schema)) sum += v, ++n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace bodylink
