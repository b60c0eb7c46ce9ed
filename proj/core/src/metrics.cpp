// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bodylink {
namespace {

constexpr double kMatchIou = 0.5;

struct MatchRecord {
  std::size_t image = 0;
  std::size_t pred = 0;
  double score = 0.0;
  std::optional<std::size_t> gt;  // object index in the image's truth
  bool ignored = false;
};

struct ClassMatch {
  std::vector<MatchRecord> records;  // descending score, ties by (image, pred)
  std::size_t num_gt = 0;
};

bool in_range(double area, AreaRange r) noexcept { return area >= r.min && area <= r.max; }

// Greedy per-image matching: predictions by descending score claim the
// unmatched ground truth with the highest IoU >= thr, preferring ground truth
// inside the area range over ignored ground truth.
ClassMatch match_class(std::span<const EvalImage> images, ClassId cls, double thr, AreaRange range) {
  ClassMatch out;
  for (std::size_t im = 0; im < images.size(); ++im) {
    const auto& img = images[im];
    std::vector<std::size_t> gts;
    std::vector<bool> gt_ignored;
    for (std::size_t g = 0; g < img.truth.objects.size(); ++g) {
      if (img.truth.objects[g].cls != cls) continue;
      gts.push_back(g);
      const bool ign = !in_range(img.truth.objects[g].box.area(), range);
      gt_ignored.push_back(ign);
      if (!ign) ++out.num_gt;
    }
    std::vector<std::size_t> preds;
    for (std::size_t p = 0; p < img.predictions.size(); ++p)
      if (img.predictions[p].cls == cls) preds.push_back(p);
    std::stable_sort(preds.begin(), preds.end(), [&](std::size_t a, std::size_t b) {
      return img.predictions[a].score > img.predictions[b].score;
    });

    std::vector<bool> taken(gts.size(), false);
    for (const auto p : preds) {
      const auto& pr = img.predictions[p];
      std::optional<std::size_t> best;
      double best_iou = thr;
      bool best_ignored = true;
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (taken[k]) continue;
        const double v = iou(pr.box, img.truth.objects[gts[k]].box);
        if (v < thr) continue;
        // A non-ignored candidate always beats an ignored one.
        const bool better = !best || (best_ignored && !gt_ignored[k]) ||
                            (best_ignored == gt_ignored[k] && v > best_iou);
        if (better) {
          best = k;
          best_iou = v;
          best_ignored = gt_ignored[k];
        }
      }
      MatchRecord rec{im, p, pr.score, std::nullopt, false};
      if (best) {
        taken[*best] = true;
        rec.gt = gts[*best];
        rec.ignored = gt_ignored[*best];
      } else {
        rec.ignored = !in_range(pr.box.area(), range);
      }
      out.records.push_back(rec);
    }
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const MatchRecord& a, const MatchRecord& b) { return a.score > b.score; });
  return out;
}

bool link_correct(const EvalImage& img, const MatchRecord& rec, double thr) {
  if (!rec.gt) return false;
  const auto& truth = img.truth.objects[*rec.gt];
  if (!truth.parent) return false;
  const auto& pred = img.predictions[rec.pred];
  if (!pred.linked_body || *pred.linked_body >= img.predictions.size()) return false;
  return iou(img.predictions[*pred.linked_body].box, img.truth.objects[*truth.parent].box) >= thr;
}

// PR points at distinct score thresholds.
PrCurve pr_curve(const std::vector<MatchRecord>& recs, const std::vector<bool>& tp,
                 std::size_t num_gt) {
  PrCurve c;
  double n_tp = 0, n_fp = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!recs[i].ignored) (tp[i] ? n_tp : n_fp) += 1.0;
    const bool boundary = i + 1 == recs.size() || recs[i + 1].score != recs[i].score;
    if (!boundary || n_tp + n_fp == 0) continue;
    c.score.push_back(recs[i].score);
    c.recall.push_back(num_gt ? n_tp / static_cast<double>(num_gt) : 0.0);
    c.precision.push_back(n_tp / (n_tp + n_fp));
  }
  return c;
}

double area_under(const PrCurve& c) {
  std::vector<double> env = c.precision;
  for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    ap += (c.recall[i] - prev_r) * env[i];
    prev_r = c.recall[i];
  }
  return ap;
}

MissRateCurve miss_curve(const std::vector<MatchRecord>& recs, const std::vector<bool>& hit,
                         std::size_t num_gt, std::size_t num_images) {
  MissRateCurve c;
  c.score.push_back(HUGE_VAL);
  c.fppi.push_back(0.0);
  c.miss_rate.push_back(1.0);
  double n_tp = 0, n_fp = 0;
  const double imgs = static_cast<double>(std::max<std::size_t>(num_images, 1));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!recs[i].ignored) (hit[i] ? n_tp : n_fp) += 1.0;
    const bool boundary = i + 1 == recs.size() || recs[i + 1].score != recs[i].score;
    if (!boundary) continue;
    c.score.push_back(recs[i].score);
    c.fppi.push_back(n_fp / imgs);
    c.miss_rate.push_back(1.0 - n_tp / static_cast<double>(num_gt));
  }
  return c;
}

std::vector<bool> tp_flags(const ClassMatch& m) {
  std::vector<bool> tp(m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) tp[i] = m.records[i].gt.has_value();
  return tp;
}

std::optional<double> mean_if_all(std::span<const std::optional<double>> v) {
  double s = 0.0;
  for (const auto& x : v) {
    if (!x) return std::nullopt;
    s += *x;
  }
  return v.empty() ? std::nullopt : std::optional<double>(s / static_cast<double>(v.size()));
}

CocoApSet coco_set(std::span<const EvalImage> images, ClassId cls, const ClassSchema& schema,
                   ApVariant variant) {
  CocoApSet set;
  const auto thr = coco_iou_thresholds();
  std::array<std::optional<double>, 10> med{}, large{};
  for (std::size_t i = 0; i < thr.size(); ++i) {
    set.per_threshold[i] = average_precision(images, cls, thr[i], schema, variant).ap;
    med[i] = average_precision(images, cls, thr[i], schema, variant, AreaRange::medium()).ap;
    large[i] = average_precision(images, cls, thr[i], schema, variant, AreaRange::large()).ap;
  }
  set.ap50 = set.per_threshold[0];
  set.ap50_95 = mean_if_all(set.per_threshold);
  set.ap_medium = mean_if_all(med);
  set.ap_large = mean_if_all(large);
  return set;
}

}  // namespace

EvalImage make_eval_image(SceneAnnotation truth, const PipelineResult& result) {
  EvalImage img;
  img.truth = std::move(truth);
  for (const auto& b : result.bodies) img.predictions.push_back({b.box, b.cls, b.score, std::nullopt});
  const auto links = result.association.body_of_part(result.parts.size());
  for (std::size_t i = 0; i < result.parts.size(); ++i) {
    const auto& p = result.parts[i];
    img.predictions.push_back({p.box, p.cls, p.score, links[i]});
  }
  return img;
}

ApResult average_precision(std::span<const EvalImage> images, ClassId cls, double iou_thr,
                           const ClassSchema& schema, ApVariant variant, AreaRange range) {
  const ClassMatch m = match_class(images, cls, iou_thr, range);
  std::vector<bool> tp = tp_flags(m);
  if (variant == ApVariant::subordinate && schema.is_part(cls)) {
    for (std::size_t i = 0; i < tp.size(); ++i)
      tp[i] = tp[i] && link_correct(images[m.records[i].image], m.records[i], iou_thr);
  }
  ApResult r;
  r.num_gt = m.num_gt;
  r.curve = pr_curve(m.records, tp, m.num_gt);
  if (m.num_gt > 0) r.ap = area_under(r.curve);
  return r;
}

std::optional<double> voc_ap(std::span<const EvalImage> images, ClassId cls, double iou_thr,
                             const ClassSchema& schema) {
  return average_precision(images, cls, iou_thr, schema).ap;
}

std::array<double, 9> fppi_reference_points() noexcept {
  std::array<double, 9> r{};
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::pow(10.0, -2.0 + 0.25 * static_cast<double>(i));
  return r;
}

double log_average(const MissRateCurve& curve) {
  double log_sum = 0.0;
  bool all_zero = true;
  for (const double ref : fppi_reference_points()) {
    double mr = 1.0;
    for (std::size_t i = 0; i < curve.fppi.size(); ++i)
      if (curve.fppi[i] <= ref) mr = curve.miss_rate[i];
    if (mr != 0.0) all_zero = false;
    log_sum += std::log(std::max(mr, 1e-10));
  }
  if (all_zero) return 0.0;
  return std::exp(log_sum / 9.0);
}

MissRateResult log_avg_miss_rate_detail(std::span<const EvalImage> images, ClassId cls,
                                        const ClassSchema&) {
  const ClassMatch m = match_class(images, cls, kMatchIou, AreaRange::all());
  MissRateResult r;
  if (m.num_gt == 0) return r;
  r.curve = miss_curve(m.records, tp_flags(m), m.num_gt, images.size());
  r.value = log_average(r.curve);
  return r;
}

std::optional<double> log_avg_miss_rate(std::span<const EvalImage> images, ClassId cls,
                                        const ClassSchema& schema) {
  return log_avg_miss_rate_detail(images, cls, schema).value;
}

MissRateResult miss_matching_rate_detail(std::span<const EvalImage> images, ClassId part_class,
                                         const ClassSchema& schema) {
  const ClassMatch parts = match_class(images, part_class, kMatchIou, AreaRange::all());
  const ClassMatch bodies = match_class(images, schema.body_class(), kMatchIou, AreaRange::all());

  // body prediction -> matched ground-truth body, per image
  std::vector<std::vector<std::optional<std::size_t>>> body_gt(images.size());
  for (std::size_t im = 0; im < images.size(); ++im)
    body_gt[im].resize(images[im].predictions.size());
  for (const auto& rec : bodies.records) body_gt[rec.image][rec.pred] = rec.gt;

  std::vector<MatchRecord> pairs;
  std::vector<bool> hit;
  for (const auto& rec : parts.records) {
    const auto& img = images[rec.image];
    const auto& pred = img.predictions[rec.pred];
    if (!pred.linked_body || *pred.linked_body >= img.predictions.size()) continue;
    bool ok = false;
    if (rec.gt) {
      const auto& parent = img.truth.objects[*rec.gt].parent;
      const auto& linked_gt = body_gt[rec.image][*pred.linked_body];
      ok = parent && linked_gt && *parent == *linked_gt;
    }
    pairs.push_back(rec);
    hit.push_back(ok);
  }
  MissRateResult r;
  if (parts.num_gt == 0) return r;
  r.curve = miss_curve(pairs, hit, parts.num_gt, images.size());
  r.value = log_average(r.curve);
  return r;
}

std::optional<double> miss_matching_rate(std::span<const EvalImage> images, ClassId part_class,
                                         const ClassSchema& schema) {
  return miss_matching_rate_detail(images, part_class, schema).value;
}

ConditionalJoint conditional_accuracy_and_joint_ap(std::span<const EvalImage> images,
                                                   ClassId part_class, const ClassSchema& schema) {
  const ClassMatch m = match_class(images, part_class, kMatchIou, AreaRange::all());
  ConditionalJoint out;
  std::vector<bool> joint(m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& rec = m.records[i];
    if (!rec.gt) continue;
    ++out.true_positive_parts;
    if (link_correct(images[rec.image], rec, kMatchIou)) {
      ++out.correctly_linked;
      joint[i] = true;
    }
  }
  if (out.true_positive_parts > 0)
    out.conditional_accuracy = static_cast<double>(out.correctly_linked) /
                               static_cast<double>(out.true_positive_parts);
  (void)schema;
  if (m.num_gt > 0) out.joint_ap = area_under(pr_curve(m.records, joint, m.num_gt));
  return out;
}

std::array<double, 10> coco_iou_thresholds() noexcept {
  std::array<double, 10> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (50.0 + 5.0 * static_cast<double>(i)) / 100.0;
  return t;
}

std::vector<CocoClassResult> coco_ap_sweep(std::span<const EvalImage> images,
                                           const ClassSchema& schema) {
  std::vector<CocoClassResult> out;
  for (const auto& c : schema.classes()) {
    CocoClassResult r;
    r.cls = c.id;
    r.original = coco_set(images, c.id, schema, ApVariant::original);
    r.subordinate = coco_set(images, c.id, schema, ApVariant::subordinate);
    out.push_back(r);
  }
  return out;
}

MetricsReport evaluate(std::span<const EvalImage> images, const ClassSchema& schema) {
  MetricsReport report;
  report.num_images = images.size();
  std::size_t tp_parts = 0, linked = 0;
  std::vector<double> joint_aps;
  const auto sweep = coco_ap_sweep(images, schema);
  for (const auto& info : schema.classes()) {
    ClassMetrics cm;
    cm.cls = info.id;
    cm.name = info.name;
    cm.kind = info.kind;
    const ApResult ap = average_precision(images, info.id, kMatchIou, schema);
    cm.num_gt = ap.num_gt;
    cm.ap50 = ap.ap;
    cm.pr_curve = ap.curve;
    const MissRateResult mr = log_avg_miss_rate_detail(images, info.id, schema);
    cm.mr2 = mr.value;
    cm.miss_rate_curve = mr.curve;
    const auto& sw = sweep[static_cast<std::size_t>(info.id.channel())];
    cm.coco = sw.original;
    cm.coco_subordinate = sw.subordinate;
    if (info.kind == ClassKind::part) {
      cm.mmr2 = miss_matching_rate(images, info.id, schema);
      const ConditionalJoint cj = conditional_accuracy_and_joint_ap(images, info.id, schema);
      cm.conditional_accuracy = cj.conditional_accuracy;
      cm.joint_ap = cj.joint_ap;
      tp_parts += cj.true_positive_parts;
      linked += cj.correctly_linked;
      if (cj.joint_ap) joint_aps.push_back(*cj.joint_ap);
    }
    report.classes.push_back(std::move(cm));
  }
  if (tp_parts > 0)
    report.conditional_accuracy = static_cast<double>(linked) / static_cast<double>(tp_parts);
  if (!joint_aps.empty())
    report.joint_ap = std::accumulate(joint_aps.begin(), joint_aps.end(), 0.0) /
                      static_cast<double>(joint_aps.size());
  return report;
}

}  // namespace bodylink
