// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bodylink/assignment.hpp"
#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"
#include "bodylink/metrics.hpp"

namespace bodylink {

/// How one part class is scattered over each body.
struct PartSpec {
  ClassId cls;
  double probability = 1.0;  // per instance
  int count = 1;             // instances per body
  double min_size = 0.2;     // part width relative to body width
  double max_size = 0.3;
  double aspect = 1.0;       // part height / width
  double band_top = 0.0;     // vertical range of the part center, as
  double band_bottom = 1.0;  // fractions of the body height
};

struct SceneSpec {
  int width = 1024;
  int height = 1024;
  int min_bodies = 1;
  int max_bodies = 6;
  double body_min_width = 80.0;
  double body_max_width = 200.0;
  double body_min_aspect = 1.8;  // height / width
  double body_max_aspect = 2.6;
  std::vector<PartSpec> parts;
  /// Requested IoU between each new body and the earlier body it is placed
  /// against. 0 places bodies without overlap.
  double crowding = 0.0;
  /// Probability a body is cut off from below; parts that no longer fit are dropped.
  double occlusion = 0.0;
  double min_center_separation = 48.0;  // pixels between body centers
  /// Part centers stay at least this fraction of the body width inside it.
  double part_margin = 0.15;
  double grid_snap = 8.0;  // corners rounded to this pixel grid; 0 disables
  std::uint64_t seed = 0;

  /// Throws ValidationError for out-of-range probabilities, part sizes that
  /// exceed the body, or body sizes that cannot fit the image.
  void validate(const ClassSchema& schema) const;

  /// Sensible part layout for a schema (hands mid-body, head/face on top,
  /// feet at the bottom).
  static SceneSpec defaults_for(const ClassSchema& schema);
};

struct NoiseSpec {
  double box_sigma = 0.0;    // side offsets, cells
  double assoc_sigma = 0.0;  // reconstructed body center, cells of the anchor's level
  double cls_sigma = 0.0;    // class logits
  double false_positive_rate = 0.0;  // per object, chance of one spurious detection
  double drop_rate = 0.0;            // per object, chance it produces no detection
  std::uint64_t seed = 0;

  void validate() const;
  bool noiseless() const noexcept {
    return box_sigma == 0.0 && assoc_sigma == 0.0 && cls_sigma == 0.0 &&
           false_positive_rate == 0.0 && drop_rate == 0.0;
  }
};

/// Deterministic scene with explicit parent links for every part.
SceneAnnotation generate_scene(const SceneSpec& spec, const ClassSchema& schema,
                               std::int64_t image_id = 1);

/// `count` scenes; scene i uses a seed derived from (spec.seed, i) and image id i + 1.
std::vector<SceneAnnotation> generate_corpus(const SceneSpec& spec, const ClassSchema& schema,
                                             int count);

/// Which anchors fire for an object.
enum class PositiveSet {
  aligned_top_k,   // the task-aligned top-K set
  all_candidates,  // every anchor inside the object's box
};

struct RenderOptions {
  int dfl_bins = 0;
  PositiveSet positives = PositiveSet::aligned_top_k;
  AlignmentConfig alignment;
  AssocMode assoc_mode = AssocMode::per_level_stride;
  double assoc_unit_px = 0.0;  // fixed-unit mode; 0 picks the coarsest stride
  double positive_logit = 12.0;
  double background_logit = -12.0;
};

struct Rendering {
  DenseMaps maps;
  /// Object index behind each anchor (AnchorLayout order): -1 background,
  /// -2 injected false positive.
  std::vector<std::int32_t> anchor_owner;
};

/// Prediction maps a well-trained network would emit for the scene: targets
/// from encode_scene, positives chosen by task alignment against an oracle
/// prediction, class scores set to the normalized alignment targets; then
/// perturbed per `noise`. An object left without a positive target (every
/// top-K anchor lost to conflicts or kept at t = 0) also fires from its best
/// unclaimed candidate.
Rendering render_predictions(const SceneAnnotation& scene, std::span<const FeatureLevel> levels,
                             double lambda, const NoiseSpec& noise, const ClassSchema& schema,
                             const RenderOptions& options = {});

struct AblationConfig {
  SceneSpec scene;
  NoiseSpec noise;
  int corpus_size = 50;
  std::vector<int> strides{8, 16, 32};
  double lambda = 2.0;
  NmsConfig nms;
  AlignmentConfig alignment;
  Enclosure enclosure = Enclosure::center;
};

struct AblationRow {
  std::string name;
  std::optional<double> conditional_accuracy;
  std::optional<double> joint_ap;
  std::optional<double> part_ap;  // AP@0.5 pooled as the mean over part classes
  std::optional<double> mmr2;     // mean over part classes
};

struct AblationReport {
  std::uint64_t seed = 0;
  int corpus_size = 0;
  std::vector<AblationRow> rows;  // full, baseline, single-scale, no task alignment

  const AblationRow& row(std::string_view name) const;
};

/// Runs four pipeline variants over one corpus: "full", "baseline"
/// (part-center matcher), "single_scale" (image-level fixed-unit offsets)
/// and "no_task_align" (all candidates positive).
AblationReport ablation_suite(const AblationConfig& config, const ClassSchema& schema);

/// For each body after the first, its maximum IoU with earlier bodies.
std::vector<double> body_overlaps(const SceneAnnotation& scene, const ClassSchema& schema);

/// Mean of body_overlaps pooled over a corpus; nullopt when no scene has two bodies.
std::optional<double> measured_crowding(std::span<const SceneAnnotation> scenes,
                                        const ClassSchema& schema);

}  // namespace bodylink
