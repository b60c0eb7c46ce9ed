// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/encoder.hpp"

namespace bodylink {

/// A prediction as the evaluator sees it. `linked_body` indexes into the same
/// image's prediction list and is set only for parts that were associated.
struct PredictedObject {
  BBox box;
  ClassId cls;
  double score = 0.0;
  std::optional<std::size_t> linked_body;
};

struct EvalImage {
  SceneAnnotation truth;
  std::vector<PredictedObject> predictions;
};

/// Flattens a pipeline result: bodies first, then parts linked to their bodies.
EvalImage make_eval_image(SceneAnnotation truth, const PipelineResult& result);

/// Area range over ground-truth box area; objects outside are ignored.
struct AreaRange {
  double min = 0.0;
  double max = 1e10;

  static constexpr AreaRange all() noexcept { return {0.0, 1e10}; }
  static constexpr AreaRange medium() noexcept { return {32.0 * 32.0, 96.0 * 96.0}; }
  static constexpr AreaRange large() noexcept { return {96.0 * 96.0, 1e10}; }
};

struct PrCurve {
  std::vector<double> score;  // threshold at each point
  std::vector<double> recall;
  std::vector<double> precision;
};

struct MissRateCurve {
  std::vector<double> score;  // starts at +inf, written as null in JSON
  std::vector<double> fppi;
  std::vector<double> miss_rate;
};

/// Whether a true positive must also carry a correct body association.
enum class ApVariant { original, subordinate };

struct ApResult {
  std::optional<double> ap;  // nullopt when the class has no ground truth
  std::size_t num_gt = 0;
  PrCurve curve;
};

/// Average precision with greedy score-ordered matching (each ground truth
/// matched at most once, best IoU >= iou_thr among the unmatched ones),
/// precision envelope and all-points interpolation. Curve points are taken
/// at distinct score thresholds. In the subordinate variant a part true
/// positive also needs its linked body to overlap the ground-truth parent
/// with IoU >= iou_thr.
ApResult average_precision(std::span<const EvalImage> images, ClassId cls, double iou_thr,
                           const ClassSchema& schema, ApVariant variant = ApVariant::original,
                           AreaRange range = AreaRange::all());

/// VOC AP of one class at one IoU threshold; nullopt without ground truth.
std::optional<double> voc_ap(std::span<const EvalImage> images, ClassId cls, double iou_thr,
                             const ClassSchema& schema);

/// The nine FPPI reference points 10^-2, 10^-1.75, ..., 10^0.
std::array<double, 9> fppi_reference_points() noexcept;

/// Geometric mean of the miss rate sampled at the reference points from a
/// staircase curve (the point with the largest FPPI not above each
/// reference). Miss rates are floored at 1e-10 inside the logarithm; the
/// result is exactly 0 only when all nine samples are 0.
double log_average(const MissRateCurve& curve);

struct MissRateResult {
  std::optional<double> value;  // nullopt without ground truth
  MissRateCurve curve;
};

/// MR^-2 of one class, matching at IoU 0.5.
MissRateResult log_avg_miss_rate_detail(std::span<const EvalImage> images, ClassId cls,
                                        const ClassSchema& schema);
std::optional<double> log_avg_miss_rate(std::span<const EvalImage> images, ClassId cls,
                                        const ClassSchema& schema);

/// mMR^-2 over ground-truth (body, part) pairs of one part class. A predicted
/// pair (an associated part) hits only when the part box matches a ground
/// truth part and its linked body is the detection matched to that part's
/// parent, both at IoU 0.5; every other predicted pair is a false pair.
MissRateResult miss_matching_rate_detail(std::span<const EvalImage> images, ClassId part_class,
                                         const ClassSchema& schema);
std::optional<double> miss_matching_rate(std::span<const EvalImage> images, ClassId part_class,
                                         const ClassSchema& schema);

struct ConditionalJoint {
  std::optional<double> conditional_accuracy;  // nullopt without true-positive parts
  std::optional<double> joint_ap;              // nullopt without ground-truth parts
  std::size_t true_positive_parts = 0;
  std::size_t correctly_linked = 0;
};

/// Conditional accuracy: among part detections matching a ground-truth part
/// at IoU 0.5, the fraction whose linked body has IoU >= 0.5 with that part's
/// parent. Joint AP: AP where a part is a true positive only if both hold.
ConditionalJoint conditional_accuracy_and_joint_ap(std::span<const EvalImage> images,
                                                   ClassId part_class, const ClassSchema& schema);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_iou_thresholds() noexcept;

struct CocoApSet {
  std::array<std::optional<double>, 10> per_threshold{};
  std::optional<double> ap50_95;
  std::optional<double> ap50;
  std::optional<double> ap_medium;  // averaged over all ten thresholds
  std::optional<double> ap_large;
};

struct CocoClassResult {
  ClassId cls;
  CocoApSet original;
  CocoApSet subordinate;
};

std::vector<CocoClassResult> coco_ap_sweep(std::span<const EvalImage> images,
                                           const ClassSchema& schema);

struct ClassMetrics {
  ClassId cls;
  std::string name;
  ClassKind kind = ClassKind::part;
  std::size_t num_gt = 0;
  std::optional<double> ap50;
  std::optional<double> mr2;
  std::optional<double> mmr2;                  // parts only
  std::optional<double> conditional_accuracy;  // parts only
  std::optional<double> joint_ap;              // parts only
  CocoApSet coco;
  CocoApSet coco_subordinate;
  PrCurve pr_curve;
  MissRateCurve miss_rate_curve;
};

struct MetricsReport {
  std::size_t num_images = 0;
  std::vector<ClassMetrics> classes;
  /// Pooled over all part classes.
  std::optional<double> conditional_accuracy;
  /// Mean of the defined per-part-class joint APs.
  std::optional<double> joint_ap;
};

/// Runs the whole suite.
MetricsReport evaluate(std::span<const EvalImage> images, const ClassSchema& schema);

}  // namespace bodylink
