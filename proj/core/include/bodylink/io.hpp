// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodylink/classes.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/dense_maps.hpp"
#include "bodylink/encoder.hpp"
#include "bodylink/metrics.hpp"
#include "bodylink/simulator.hpp"

namespace bodylink {

std::string_view library_version() noexcept;

// ---------------------------------------------------------------------------
// Annotations: COCO-style JSON with boxes as [x, y, w, h].
//
//   {"images":      [{"id", "width", "height"}],
//    "categories":  [{"id", "name", "kind": "body"|"part"}],
//    "annotations": [{"id", "image_id", "category_id", "bbox",
//                     "parent_annotation_id"?}]}

struct AnnotationSet {
  ClassSchema schema = ClassSchema::body_hands();
  std::vector<SceneAnnotation> scenes;  // file order of "images"
  ParentResolutionStats resolution;     // parents inferred for links left out
};

/// Throws ValidationError naming the offending annotation id for broken
/// references, non-positive sizes, bad parent links and orphan parts, and
/// IoError when the file cannot be read.
AnnotationSet parse_annotations(std::string_view json_text);
AnnotationSet load_annotations(const std::filesystem::path& path);

std::string annotations_to_json(std::span<const SceneAnnotation> scenes, const ClassSchema& schema);
void write_annotations(const std::filesystem::path& path, std::span<const SceneAnnotation> scenes,
                       const ClassSchema& schema);

// ---------------------------------------------------------------------------
// Binary prediction dump. Little-endian throughout:
//
//   "PBAD" | u32 version
//   per image:  u64 image_id | u32 level_count
//     per level: u32 stride | u32 H | u32 W | u32 N
//                f32 box planes (4, or 4*bins) | f32 class planes (N) | f32 assoc planes (2)
//
// Planes are row-major H*W. Values are stored as float32, so a round trip
// reproduces float32-representable maps exactly and re-writing a read dump
// is byte-identical. A JSON sidecar at "<path>.json" carries lambda, the
// DFL bin count, the association mode and the class schema.

inline constexpr char kDumpMagic[4] = {'P', 'B', 'A', 'D'};
inline constexpr std::uint32_t kDumpVersion = 1;

struct DumpManifest {
  double lambda = 2.0;
  int dfl_bins = 0;
  AssocMode assoc_mode = AssocMode::per_level_stride;
  double assoc_unit_px = 0.0;
  std::vector<ClassInfo> classes;
  std::string content = "predictions";  // or "targets"

  ClassSchema schema() const { return ClassSchema(classes); }
  static DumpManifest for_maps(const DenseMaps& maps, const ClassSchema& schema,
                               std::string content = "predictions");
};

std::filesystem::path sidecar_path(const std::filesystem::path& dump);

struct DumpRecord {
  std::int64_t image_id = 0;
  DenseMaps maps;
};

class DumpWriter {
 public:
  /// Writes the sidecar and the file header immediately.
  DumpWriter(const std::filesystem::path& path, DumpManifest manifest);

  /// Throws ValidationError if the maps disagree with the manifest.
  void write(std::int64_t image_id, const DenseMaps& maps);
  void close();

 private:
  std::filesystem::path path_;
  DumpManifest manifest_;
  std::ofstream out_;
};

/// Streams one image at a time. Malformed content raises FormatError with
/// the byte offset and, once known, the image id.
class DumpReader {
 public:
  explicit DumpReader(const std::filesystem::path& path);

  const DumpManifest& manifest() const noexcept { return manifest_; }
  /// nullopt at a clean end of file.
  std::optional<DumpRecord> next();

 private:
  void read_exact(void* dst, std::size_t n, const char* what, std::optional<std::uint64_t> image);

  std::filesystem::path path_;
  DumpManifest manifest_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

std::vector<DumpRecord> read_dump(const std::filesystem::path& path);
void write_dump(const std::filesystem::path& path, const DumpManifest& manifest,
                std::span<const DumpRecord> records);

/// Target maps in dump form: box planes hold the primary object's (l,t,r,b),
/// class planes a 0/1 indicator, assoc planes the part's (m,n).
DenseMaps target_maps(const DenseTargetMaps& targets, const ClassSchema& schema);

// ---------------------------------------------------------------------------
// Decoded detections JSON: an array with one entry per image, holding the
// predictions in evaluation order (bodies, then parts) with "linked_body"
// indexing into the same list.

struct ImageDetections {
  std::int64_t image_id = 0;
  PipelineResult result;
};

struct ImagePredictions {
  std::int64_t image_id = 0;
  std::vector<PredictedObject> predictions;
};

std::string detections_to_json(std::span<const ImageDetections> images, const ClassSchema& schema);
std::vector<ImagePredictions> parse_detections(std::string_view json_text, const ClassSchema& schema);
std::vector<ImagePredictions> read_detections(const std::filesystem::path& path,
                                              const ClassSchema& schema);

// ---------------------------------------------------------------------------
// Metrics report.

struct RunConfig {
  double lambda = 2.0;
  std::vector<int> strides{8, 16, 32};
  NmsConfig nms;
  std::vector<int> capacity;  // per class id, index 0 unused
  std::string enclosure = "center";
  std::string matcher = "predicted_center";
  std::optional<std::uint64_t> seed;
  std::string source;  // what was evaluated
};

struct MetricsDocument {
  std::string tool = "bodylink";
  std::string version{library_version()};
  RunConfig config;
  MetricsReport report;
  std::optional<AblationReport> ablation;
};

/// Throws ValidationError when a value is out of range or curves are ragged.
void validate_metrics(const MetricsDocument& doc);
std::string metrics_to_json(const MetricsDocument& doc);
MetricsDocument parse_metrics(std::string_view json_text);
void write_metrics(const std::filesystem::path& path, const MetricsDocument& doc);
MetricsDocument read_metrics(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace bodylink
