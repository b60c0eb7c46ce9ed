// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bodylink/errors.hpp"

#ifndef BODYLINK_VERSION
#define BODYLINK_VERSION "0.0.0"
#endif

namespace bodylink {

using json = nlohmann::ordered_json;

FormatError::FormatError(const std::string& what, std::uint64_t byte_offset,
                         std::optional<std::uint64_t> image_id)
    : IoError(what + " (byte offset " + std::to_string(byte_offset) +
              (image_id ? ", image " + std::to_string(*image_id) : std::string()) + ")"),
      byte_offset_(byte_offset),
      image_id_(image_id) {}

std::string_view library_version() noexcept { return BODYLINK_VERSION; }

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw ValidationError(msg); }

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    invalid(std::string("malformed ") + what + " JSON at byte " + std::to_string(e.byte));
  }
}

const json& member(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) invalid(ctx + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) invalid(ctx + ": missing \"" + key + "\"");
  return *it;
}

template <class T>
T get(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) invalid(ctx + ": \"" + key + "\" must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) invalid(ctx + ": \"" + key + "\" must be an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) invalid(ctx + ": \"" + key + "\" must be a number");
  }
  return v.get<T>();
}

const json& array_member(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_array()) invalid(ctx + ": \"" + key + "\" must be an array");
  return v;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) invalid(ctx + ": \"" + key + "\" must be a number or null");
  return v.get<double>();
}

std::vector<double> doubles(const json& obj, const char* key, const std::string& ctx) {
  const json& arr = array_member(obj, key, ctx);
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (v.is_null() && std::string_view(key) == "score") {
      out.push_back(HUGE_VAL);  // the threshold above every detection
      continue;
    }
    if (!v.is_number()) invalid(ctx + ": \"" + key + "\" must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json classes_json(const std::vector<ClassInfo>& classes) {
  json arr = json::array();
  for (const auto& c : classes)
    arr.push_back({{"id", c.id.value}, {"name", c.name}, {"kind", std::string(to_string(c.kind))}});
  return arr;
}

std::vector<ClassInfo> parse_classes(const json& arr, const std::string& ctx) {
  std::vector<ClassInfo> out;
  for (const auto& c : arr) {
    const auto id = get<int>(c, "id", ctx + " category");
    const std::string cctx = ctx + " category " + std::to_string(id);
    out.push_back({ClassId{id}, get<std::string>(c, "name", cctx),
                   parse_class_kind(get<std::string>(c, "kind", cctx))});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::string_view to_string(AssocMode m) noexcept {
  return m == AssocMode::fixed_unit ? "fixed_unit" : "per_level_stride";
}

AssocMode parse_assoc_mode(const std::string& s) {
  if (s == "per_level_stride") return AssocMode::per_level_stride;
  if (s == "fixed_unit") return AssocMode::fixed_unit;
  invalid("unknown association mode '" + s + "'");
}

// Little-endian primitives.
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_plane(std::string& buf, const std::vector<double>& values) {
  for (double v : values) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

json manifest_json(const DumpManifest& m) {
  return {{"format", "PBAD"},
          {"version", kDumpVersion},
          {"content", m.content},
          {"lambda", m.lambda},
          {"dfl_bins", m.dfl_bins},
          {"assoc_mode", std::string(to_string(m.assoc_mode))},
          {"assoc_unit_px", m.assoc_unit_px},
          {"classes", classes_json(m.classes)}};
}

DumpManifest parse_manifest(const json& j, const std::string& ctx) {
  if (get<std::string>(j, "format", ctx) != "PBAD") invalid(ctx + ": not a PBAD manifest");
  if (get<std::uint32_t>(j, "version", ctx) != kDumpVersion)
    invalid(ctx + ": unsupported manifest version");
  DumpManifest m;
  m.content = get<std::string>(j, "content", ctx);
  m.lambda = get<double>(j, "lambda", ctx);
  m.dfl_bins = get<int>(j, "dfl_bins", ctx);
  m.assoc_mode = parse_assoc_mode(get<std::string>(j, "assoc_mode", ctx));
  m.assoc_unit_px = get<double>(j, "assoc_unit_px", ctx);
  m.classes = parse_classes(array_member(j, "classes", ctx), ctx);
  if (!(m.lambda > 0.0)) invalid(ctx + ": lambda must be positive");
  if (m.dfl_bins < 0 || m.dfl_bins == 1) invalid(ctx + ": dfl_bins must be 0 or >= 2");
  (void)m.schema();  // validates the class list
  return m;
}

json pr_json(const PrCurve& c) {
  return {{"score", c.score}, {"recall", c.recall}, {"precision", c.precision}};
}
json mr_json(const MissRateCurve& c) {
  json score = json::array();
  for (double v : c.score) score.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  return {{"score", score}, {"fppi", c.fppi}, {"miss_rate", c.miss_rate}};
}

json coco_json(const CocoApSet& s) {
  json per = json::array();
  for (const auto& v : s.per_threshold) per.push_back(opt(v));
  return {{"per_threshold", per},
          {"ap50_95", opt(s.ap50_95)},
          {"ap50", opt(s.ap50)},
          {"ap_medium", opt(s.ap_medium)},
          {"ap_large", opt(s.ap_large)}};
}

CocoApSet parse_coco(const json& j, const std::string& ctx) {
  CocoApSet s;
  const json& per = array_member(j, "per_threshold", ctx);
  if (per.size() != s.per_threshold.size()) invalid(ctx + ": per_threshold needs 10 entries");
  for (std::size_t i = 0; i < per.size(); ++i) {
    if (per[i].is_null()) continue;
    if (!per[i].is_number()) invalid(ctx + ": per_threshold entries must be numbers or null");
    s.per_threshold[i] = per[i].get<double>();
  }
  s.ap50_95 = opt_double(j, "ap50_95", ctx);
  s.ap50 = opt_double(j, "ap50", ctx);
  s.ap_medium = opt_double(j, "ap_medium", ctx);
  s.ap_large = opt_double(j, "ap_large", ctx);
  return s;
}

void check_unit(const std::optional<double>& v, const std::string& what) {
  if (v && !(*v >= 0.0 && *v <= 1.0)) invalid("metrics: " + what + " must lie in [0, 1]");
}

void check_coco(const CocoApSet& s, const std::string& what) {
  for (const auto& v : s.per_threshold) check_unit(v, what + " per-threshold AP");
  check_unit(s.ap50_95, what + " AP50:95");
  check_unit(s.ap50, what + " AP50");
  check_unit(s.ap_medium, what + " AP_M");
  check_unit(s.ap_large, what + " AP_L");
}

void check_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v)
    if (!std::isfinite(x)) invalid("metrics: " + what + " contains a non-finite value");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Annotations

AnnotationSet parse_annotations(std::string_view json_text) {
  const json root = parse_json(json_text, "annotation");
  const std::string ctx = "annotations";
  AnnotationSet set;
  set.schema = ClassSchema(parse_classes(array_member(root, "categories", ctx), ctx));

  std::map<std::int64_t, std::size_t> image_index;
  for (const auto& img : array_member(root, "images", ctx)) {
    SceneAnnotation s;
    s.image_id = get<std::int64_t>(img, "id", "image");
    const std::string ictx = "image " + std::to_string(s.image_id);
    s.width = get<int>(img, "width", ictx);
    s.height = get<int>(img, "height", ictx);
    if (s.width <= 0 || s.height <= 0) invalid(ictx + ": width and height must be positive");
    if (!image_index.emplace(s.image_id, set.scenes.size()).second)
      invalid(ictx + ": listed more than once");
    set.scenes.push_back(std::move(s));
  }

  struct Slot {
    std::size_t scene;
    std::size_t object;
  };
  std::map<std::int64_t, Slot> by_id;
  std::vector<std::pair<std::int64_t, std::int64_t>> links;  // (annotation, parent)
  for (const auto& a : array_member(root, "annotations", ctx)) {
    const auto id = get<std::int64_t>(a, "id", "annotation");
    const std::string actx = "annotation " + std::to_string(id);
    const auto image_id = get<std::int64_t>(a, "image_id", actx);
    const auto it = image_index.find(image_id);
    if (it == image_index.end()) invalid(actx + ": unknown image_id " + std::to_string(image_id));
    const ClassId cls{get<int>(a, "category_id", actx)};
    if (!set.schema.contains(cls)) invalid(actx + ": unknown category_id " + std::to_string(cls.value));
    const json& bbox = array_member(a, "bbox", actx);
    if (bbox.size() != 4 || !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); }))
      invalid(actx + ": bbox must be [x, y, w, h]");
    const double w = bbox[2].get<double>(), h = bbox[3].get<double>();
    if (!(w > 0.0 && h > 0.0)) invalid(actx + ": bbox width and height must be positive");
    const BBox box = BBox::from_xywh(bbox[0].get<double>(), bbox[1].get<double>(), w, h);

    auto& scene = set.scenes[it->second];
    if (!by_id.emplace(id, Slot{it->second, scene.objects.size()}).second)
      invalid(actx + ": duplicate annotation id");
    scene.objects.push_back({box, cls, std::nullopt, id});

    const auto pit = a.find("parent_annotation_id");
    if (pit != a.end() && !pit->is_null()) {
      if (!pit->is_number_integer()) invalid(actx + ": parent_annotation_id must be an integer");
      if (!set.schema.is_part(cls)) invalid(actx + ": a body annotation cannot have a parent");
      links.emplace_back(id, pit->get<std::int64_t>());
    }
  }

  for (const auto& [id, parent_id] : links) {
    const std::string actx = "annotation " + std::to_string(id);
    const Slot child = by_id.at(id);
    const auto pit = by_id.find(parent_id);
    if (pit == by_id.end())
      invalid(actx + ": parent_annotation_id " + std::to_string(parent_id) + " does not exist");
    const Slot parent = pit->second;
    if (parent.scene != child.scene)
      invalid(actx + ": parent_annotation_id " + std::to_string(parent_id) + " belongs to another image");
    auto& scene = set.scenes[child.scene];
    if (set.schema.is_part(scene.objects[parent.object].cls))
      invalid(actx + ": parent_annotation_id " + std::to_string(parent_id) + " refers to a part");
    scene.objects[child.object].parent = parent.object;
  }

  for (auto& scene : set.scenes) {
    const auto stats = resolve_parents(scene, set.schema);
    set.resolution.resolved += stats.resolved;
    set.resolution.ambiguous += stats.ambiguous;
    validate_scene(scene, set.schema);
  }
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path));
}

std::string annotations_to_json(std::span<const SceneAnnotation> scenes, const ClassSchema& schema) {
  json images = json::array(), anns = json::array();
  std::int64_t next_id = 1;
  for (const auto& s : scenes) {
    validate_scene(s, schema);
    images.push_back({{"id", s.image_id}, {"width", s.width}, {"height", s.height}});
    // Sequential ids keep references unambiguous across images.
    const std::int64_t base = next_id;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& o = s.objects[i];
      json a = {{"id", base + static_cast<std::int64_t>(i)},
                {"image_id", s.image_id},
                {"category_id", o.cls.value},
                {"bbox", {o.box.x_l, o.box.y_t, o.box.width(), o.box.height()}}};
      if (o.parent) a["parent_annotation_id"] = base + static_cast<std::int64_t>(*o.parent);
      anns.push_back(std::move(a));
    }
    next_id += static_cast<std::int64_t>(s.objects.size());
  }
  json root = {{"images", images}, {"categories", classes_json(schema.classes())}, {"annotations", anns}};
  return root.dump(1) + "\n";
}

void write_annotations(const std::filesystem::path& path, std::span<const SceneAnnotation> scenes,
                       const ClassSchema& schema) {
  write_text_file(path, annotations_to_json(scenes, schema));
}

// ---------------------------------------------------------------------------
// Prediction dump

DumpManifest DumpManifest::for_maps(const DenseMaps& maps, const ClassSchema& schema,
                                    std::string content) {
  DumpManifest m;
  m.lambda = maps.lambda;
  m.dfl_bins = maps.dfl_bins();
  m.assoc_mode = maps.assoc_mode;
  m.assoc_unit_px = maps.assoc_unit_px;
  m.classes = schema.classes();
  m.content = std::move(content);
  return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path& dump) {
  return std::filesystem::path(dump.string() + ".json");
}

DumpWriter::DumpWriter(const std::filesystem::path& path, DumpManifest manifest)
    : path_(path), manifest_(std::move(manifest)) {
  (void)manifest_.schema();
  write_text_file(sidecar_path(path_), manifest_json(manifest_).dump(1) + "\n");
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot create " + path_.string());
  std::string header(kDumpMagic, 4);
  put_u32(header, kDumpVersion);
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (!out_) throw IoError("failed writing " + path_.string());
}

void DumpWriter::write(std::int64_t image_id, const DenseMaps& maps) {
  validate_maps(maps);
  const std::string ctx = "image " + std::to_string(image_id);
  if (maps.num_classes() != static_cast<int>(manifest_.classes.size()))
    invalid(ctx + ": class count differs from the dump manifest");
  if (maps.dfl_bins() != manifest_.dfl_bins) invalid(ctx + ": DFL bins differ from the dump manifest");
  if (maps.lambda != manifest_.lambda || maps.assoc_mode != manifest_.assoc_mode ||
      maps.assoc_unit_px != manifest_.assoc_unit_px)
    invalid(ctx + ": association parameters differ from the dump manifest");

  std::string buf;
  put_u64(buf, static_cast<std::uint64_t>(image_id));
  put_u32(buf, static_cast<std::uint32_t>(maps.levels.size()));
  for (const auto& lm : maps.levels) {
    put_u32(buf, static_cast<std::uint32_t>(lm.level.stride));
    put_u32(buf, static_cast<std::uint32_t>(lm.level.height));
    put_u32(buf, static_cast<std::uint32_t>(lm.level.width));
    put_u32(buf, static_cast<std::uint32_t>(lm.num_classes));
    put_plane(buf, lm.box);
    put_plane(buf, lm.cls);
    put_plane(buf, lm.assoc);
  }
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out_) throw IoError("failed writing " + path_.string());
}

void DumpWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail()) throw IoError("failed closing " + path_.string());
}

DumpReader::DumpReader(const std::filesystem::path& path) : path_(path) {
  const auto side = sidecar_path(path_);
  if (!std::filesystem::exists(side)) throw IoError("missing sidecar manifest " + side.string());
  manifest_ = parse_manifest(parse_json(read_text_file(side), "manifest"), side.string());
  in_.open(path_, std::ios::binary);
  if (!in_) throw IoError("cannot open " + path_.string());

  unsigned char header[8];
  read_exact(header, 8, "truncated file header", std::nullopt);
  if (!std::equal(header, header + 4, reinterpret_cast<const unsigned char*>(kDumpMagic)))
    throw FormatError("bad magic, not a PBAD dump", 0);
  const auto version = get_u32(header + 4);
  if (version != kDumpVersion)
    throw FormatError("unsupported dump version " + std::to_string(version), 4);
}

void DumpReader::read_exact(void* dst, std::size_t n, const char* what,
                            std::optional<std::uint64_t> image) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::uint64_t>(in_.gcount());
  if (got != n) throw FormatError(what, offset_ + got, image);
  offset_ += n;
}

std::optional<DumpRecord> DumpReader::next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

  unsigned char head[12];
  read_exact(head, 12, "truncated image header", std::nullopt);
  const std::uint64_t raw_id = get_u64(head);
  const std::uint32_t n_levels = get_u32(head + 8);
  if (n_levels == 0 || n_levels > 16)
    throw FormatError("implausible level count " + std::to_string(n_levels), offset_ - 4, raw_id);

  const int n_classes = static_cast<int>(manifest_.classes.size());
  const int box_ch = manifest_.dfl_bins > 0 ? 4 * manifest_.dfl_bins : 4;
  std::vector<FeatureLevel> levels;
  std::vector<std::vector<float>> planes;
  for (std::uint32_t li = 0; li < n_levels; ++li) {
    unsigned char lh[16];
    read_exact(lh, 16, "truncated level header", raw_id);
    const std::uint32_t stride = get_u32(lh), h = get_u32(lh + 4), w = get_u32(lh + 8),
                        n = get_u32(lh + 12);
    const std::uint64_t at = offset_ - 16;
    if (stride == 0 || h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16))
      throw FormatError("invalid level geometry", at, raw_id);
    if (static_cast<int>(n) != n_classes)
      throw FormatError("level class count " + std::to_string(n) + " differs from manifest", at + 12,
                        raw_id);
    levels.push_back({static_cast<int>(stride), static_cast<int>(h), static_cast<int>(w), std::nullopt});
    const std::size_t count =
        static_cast<std::size_t>(box_ch + n_classes + 2) * static_cast<std::size_t>(h) * w;
    std::vector<unsigned char> bytes(count * 4);
    read_exact(bytes.data(), bytes.size(), "truncated plane data", raw_id);
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i)
      values[i] = std::bit_cast<float>(get_u32(bytes.data() + 4 * i));
    planes.push_back(std::move(values));
  }
  try {
    validate_levels(levels);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("invalid pyramid: ") + e.what(), offset_, raw_id);
  }

  DumpRecord rec;
  rec.image_id = static_cast<std::int64_t>(raw_id);
  rec.maps = make_dense_maps(levels, n_classes, manifest_.dfl_bins, manifest_.lambda);
  rec.maps.assoc_mode = manifest_.assoc_mode;
  rec.maps.assoc_unit_px = manifest_.assoc_unit_px;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    auto& lm = rec.maps.levels[li];
    const auto& src = planes[li];
    auto it = src.begin();
    for (auto* dst : {&lm.box, &lm.cls, &lm.assoc}) {
      std::copy(it, it + static_cast<std::ptrdiff_t>(dst->size()), dst->begin());
      it += static_cast<std::ptrdiff_t>(dst->size());
    }
  }
  return rec;
}

std::vector<DumpRecord> read_dump(const std::filesystem::path& path) {
  DumpReader reader(path);
  std::vector<DumpRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

void write_dump(const std::filesystem::path& path, const DumpManifest& manifest,
                std::span<const DumpRecord> records) {
  DumpWriter writer(path, manifest);
  for (const auto& r : records) writer.write(r.image_id, r.maps);
  writer.close();
}

DenseMaps target_maps(const DenseTargetMaps& targets, const ClassSchema& schema) {
  const auto levels = targets.feature_levels();
  DenseMaps maps = make_dense_maps(levels, schema.size(), 0, targets.lambda, 0.0);
  for (std::size_t li = 0; li < levels.size(); ++li) {
    auto& lm = maps.levels[li];
    const auto& lt = targets.levels[li];
    for (std::size_t ci = 0; ci < lm.plane(); ++ci) {
      if (lt.class_target[ci] == 0) continue;
      for (int c = 0; c < 4; ++c) lm.box_at(c, ci) = lt.box_offsets[ci][static_cast<std::size_t>(c)];
      lm.cls_at(ClassId{lt.class_target[ci]}.channel(), ci) = 1.0;
      lm.assoc_at(0, ci) = lt.assoc_offsets[ci][0];
      lm.assoc_at(1, ci) = lt.assoc_offsets[ci][1];
    }
  }
  return maps;
}

// ---------------------------------------------------------------------------
// Detections

std::string detections_to_json(std::span<const ImageDetections> images, const ClassSchema& schema) {
  json root = json::array();
  for (const auto& img : images) {
    json preds = json::array();
    auto base = [&](const Detection& d, std::size_t index) {
      return json{{"index", index},
                  {"category_id", d.cls.value},
                  {"name", schema.info(d.cls).name},
                  {"score", d.score},
                  {"box", {d.box.x_l, d.box.y_t, d.box.x_r, d.box.y_b}},
                  {"anchor", {{"level", d.anchor.level}, {"x", d.anchor.cell.x}, {"y", d.anchor.cell.y}}}};
    };
    const auto& r = img.result;
    for (std::size_t i = 0; i < r.bodies.size(); ++i) preds.push_back(base(r.bodies[i], i));
    const auto links = r.association.body_of_part(r.parts.size());
    std::vector<std::optional<UnmatchedReason>> reasons(r.parts.size());
    for (const auto& u : r.association.unmatched)
      if (u.part < reasons.size()) reasons[u.part] = u.reason;
    for (std::size_t i = 0; i < r.parts.size(); ++i) {
      const auto& p = r.parts[i];
      json j = base(p, r.bodies.size() + i);
      j["body_center"] = p.body_center ? json{p.body_center->x, p.body_center->y} : json(nullptr);
      j["linked_body"] = links[i] ? json(*links[i]) : json(nullptr);
      if (reasons[i])
        j["unmatched"] = *reasons[i] == UnmatchedReason::capacity_exhausted ? "capacity_exhausted"
                                                                             : "no_enclosing_body";
      preds.push_back(std::move(j));
    }
    root.push_back({{"image_id", img.image_id}, {"predictions", preds}});
  }
  return root.dump(1) + "\n";
}

std::vector<ImagePredictions> parse_detections(std::string_view json_text, const ClassSchema& schema) {
  const json root = parse_json(json_text, "detections");
  if (!root.is_array()) invalid("detections: top level must be an array");
  std::vector<ImagePredictions> out;
  for (const auto& img : root) {
    ImagePredictions ip;
    ip.image_id = get<std::int64_t>(img, "image_id", "detections");
    const std::string ictx = "detections for image " + std::to_string(ip.image_id);
    const json& preds = array_member(img, "predictions", ictx);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const std::string pctx = ictx + " prediction " + std::to_string(i);
      const json& p = preds[i];
      PredictedObject po;
      po.cls = ClassId{get<int>(p, "category_id", pctx)};
      if (!schema.contains(po.cls)) invalid(pctx + ": unknown category_id " + std::to_string(po.cls.value));
      po.score = get<double>(p, "score", pctx);
      const json& box = array_member(p, "box", pctx);
      if (box.size() != 4) invalid(pctx + ": box must be [x_l, y_t, x_r, y_b]");
      po.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
      const auto lit = p.find("linked_body");
      if (lit != p.end() && !lit->is_null()) {
        if (!lit->is_number_unsigned()) invalid(pctx + ": linked_body must be an index");
        po.linked_body = lit->get<std::size_t>();
      }
      ip.predictions.push_back(po);
    }
    for (std::size_t i = 0; i < ip.predictions.size(); ++i) {
      const auto& lb = ip.predictions[i].linked_body;
      if (!lb) continue;
      const std::string pctx = ictx + " prediction " + std::to_string(i);
      if (!schema.is_part(ip.predictions[i].cls)) invalid(pctx + ": only parts may link to a body");
      if (*lb >= ip.predictions.size() || schema.is_part(ip.predictions[*lb].cls))
        invalid(pctx + ": linked_body " + std::to_string(*lb) + " is not a body prediction");
    }
    out.push_back(std::move(ip));
  }
  return out;
}

std::vector<ImagePredictions> read_detections(const std::filesystem::path& path,
                                              const ClassSchema& schema) {
  return parse_detections(read_text_file(path), schema);
}

// ---------------------------------------------------------------------------
// Metrics

void validate_metrics(const MetricsDocument& doc) {
  if (doc.tool.empty() || doc.version.empty()) invalid("metrics: tool and version are required");
  if (!(doc.config.lambda > 0.0)) invalid("metrics: config lambda must be positive");
  doc.config.nms.validate();
  check_unit(doc.report.conditional_accuracy, "conditional accuracy");
  check_unit(doc.report.joint_ap, "joint AP");
  for (const auto& c : doc.report.classes) {
    const std::string what = "class " + c.name;
    check_unit(c.ap50, what + " AP50");
    check_unit(c.mr2, what + " MR");
    check_unit(c.mmr2, what + " mMR");
    check_unit(c.conditional_accuracy, what + " conditional accuracy");
    check_unit(c.joint_ap, what + " joint AP");
    check_coco(c.coco, what);
    check_coco(c.coco_subordinate, what + " subordinate");
    if (c.pr_curve.recall.size() != c.pr_curve.score.size() ||
        c.pr_curve.precision.size() != c.pr_curve.score.size())
      invalid("metrics: " + what + " PR curve arrays differ in length");
    if (c.miss_rate_curve.fppi.size() != c.miss_rate_curve.score.size() ||
        c.miss_rate_curve.miss_rate.size() != c.miss_rate_curve.score.size())
      invalid("metrics: " + what + " miss-rate curve arrays differ in length");
    check_finite(c.pr_curve.recall, what + " recall");
    check_finite(c.pr_curve.precision, what + " precision");
    check_finite(c.miss_rate_curve.fppi, what + " FPPI");
    check_finite(c.miss_rate_curve.miss_rate, what + " miss rate");
  }
  if (doc.ablation)
    for (const auto& r : doc.ablation->rows) {
      check_unit(r.conditional_accuracy, "ablation " + r.name + " conditional accuracy");
      check_unit(r.joint_ap, "ablation " + r.name + " joint AP");
      check_unit(r.part_ap, "ablation " + r.name + " part AP");
      check_unit(r.mmr2, "ablation " + r.name + " mMR");
    }
}

std::string metrics_to_json(const MetricsDocument& doc) {
  validate_metrics(doc);
  const auto& cfg = doc.config;
  json config = {{"lambda", cfg.lambda},
                 {"strides", cfg.strides},
                 {"nms",
                  {{"body_conf", cfg.nms.body_conf},
                   {"body_iou", cfg.nms.body_iou},
                   {"part_conf", cfg.nms.part_conf},
                   {"part_iou", cfg.nms.part_iou}}},
                 {"capacity", cfg.capacity},
                 {"enclosure", cfg.enclosure},
                 {"matcher", cfg.matcher},
                 {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
                 {"source", cfg.source}};

  json classes = json::array();
  for (const auto& c : doc.report.classes) {
    classes.push_back({{"id", c.cls.value},
                       {"name", c.name},
                       {"kind", std::string(to_string(c.kind))},
                       {"num_gt", c.num_gt},
                       {"ap50", opt(c.ap50)},
                       {"mr2", opt(c.mr2)},
                       {"mmr2", opt(c.mmr2)},
                       {"conditional_accuracy", opt(c.conditional_accuracy)},
                       {"joint_ap", opt(c.joint_ap)},
                       {"coco", coco_json(c.coco)},
                       {"coco_subordinate", coco_json(c.coco_subordinate)},
                       {"pr_curve", pr_json(c.pr_curve)},
                       {"miss_rate_curve", mr_json(c.miss_rate_curve)}});
  }
  json root = {{"tool", doc.tool},
               {"version", doc.version},
               {"config", config},
               {"num_images", doc.report.num_images},
               {"summary",
                {{"conditional_accuracy", opt(doc.report.conditional_accuracy)},
                 {"joint_ap", opt(doc.report.joint_ap)}}},
               {"classes", classes}};
  if (doc.ablation) {
    json rows = json::array();
    for (const auto& r : doc.ablation->rows)
      rows.push_back({{"name", r.name},
                      {"conditional_accuracy", opt(r.conditional_accuracy)},
                      {"joint_ap", opt(r.joint_ap)},
                      {"part_ap", opt(r.part_ap)},
                      {"mmr2", opt(r.mmr2)}});
    root["ablation"] = {{"seed", doc.ablation->seed},
                        {"corpus_size", doc.ablation->corpus_size},
                        {"rows", rows}};
  }
  return root.dump(1) + "\n";
}

MetricsDocument parse_metrics(std::string_view json_text) {
  const json root = parse_json(json_text, "metrics");
  const std::string ctx = "metrics";
  MetricsDocument doc;
  doc.tool = get<std::string>(root, "tool", ctx);
  doc.version = get<std::string>(root, "version", ctx);

  const json& c = member(root, "config", ctx);
  const std::string cctx = "metrics config";
  doc.config.lambda = get<double>(c, "lambda", cctx);
  doc.config.strides = member(c, "strides", cctx).get<std::vector<int>>();
  const json& n = member(c, "nms", cctx);
  doc.config.nms = {get<double>(n, "body_conf", cctx), get<double>(n, "body_iou", cctx),
                    get<double>(n, "part_conf", cctx), get<double>(n, "part_iou", cctx)};
  doc.config.capacity = member(c, "capacity", cctx).get<std::vector<int>>();
  doc.config.enclosure = get<std::string>(c, "enclosure", cctx);
  doc.config.matcher = get<std::string>(c, "matcher", cctx);
  const json& seed = member(c, "seed", cctx);
  if (!seed.is_null()) doc.config.seed = seed.get<std::uint64_t>();
  doc.config.source = get<std::string>(c, "source", cctx);

  doc.report.num_images = get<std::size_t>(root, "num_images", ctx);
  const json& summary = member(root, "summary", ctx);
  doc.report.conditional_accuracy = opt_double(summary, "conditional_accuracy", ctx);
  doc.report.joint_ap = opt_double(summary, "joint_ap", ctx);

  for (const auto& j : array_member(root, "classes", ctx)) {
    ClassMetrics m;
    m.cls = ClassId{get<int>(j, "id", ctx + " class")};
    const std::string kctx = "metrics class " + std::to_string(m.cls.value);
    m.name = get<std::string>(j, "name", kctx);
    m.kind = parse_class_kind(get<std::string>(j, "kind", kctx));
    m.num_gt = get<std::size_t>(j, "num_gt", kctx);
    m.ap50 = opt_double(j, "ap50", kctx);
    m.mr2 = opt_double(j, "mr2", kctx);
    m.mmr2 = opt_double(j, "mmr2", kctx);
    m.conditional_accuracy = opt_double(j, "conditional_accuracy", kctx);
    m.joint_ap = opt_double(j, "joint_ap", kctx);
    m.coco = parse_coco(member(j, "coco", kctx), kctx);
    m.coco_subordinate = parse_coco(member(j, "coco_subordinate", kctx), kctx);
    const json& pr = member(j, "pr_curve", kctx);
    m.pr_curve = {doubles(pr, "score", kctx), doubles(pr, "recall", kctx), doubles(pr, "precision", kctx)};
    const json& mr = member(j, "miss_rate_curve", kctx);
    m.miss_rate_curve = {doubles(mr, "score", kctx), doubles(mr, "fppi", kctx),
                         doubles(mr, "miss_rate", kctx)};
    doc.report.classes.push_back(std::move(m));
  }

  const auto ait = root.find("ablation");
  if (ait != root.end()) {
    AblationReport ab;
    ab.seed = get<std::uint64_t>(*ait, "seed", ctx + " ablation");
    ab.corpus_size = get<int>(*ait, "corpus_size", ctx + " ablation");
    for (const auto& r : array_member(*ait, "rows", ctx + " ablation")) {
      AblationRow row;
      row.name = get<std::string>(r, "name", ctx + " ablation row");
      const std::string rctx = "metrics ablation row " + row.name;
      row.conditional_accuracy = opt_double(r, "conditional_accuracy", rctx);
      row.joint_ap = opt_double(r, "joint_ap", rctx);
      row.part_ap = opt_double(r, "part_ap", rctx);
      row.mmr2 = opt_double(r, "mmr2", rctx);
      ab.rows.push_back(std::move(row));
    }
    doc.ablation = std::move(ab);
  }
  validate_metrics(doc);
  return doc;
}

void write_metrics(const std::filesystem::path& path, const MetricsDocument& doc) {
  write_text_file(path, metrics_to_json(doc));
}

MetricsDocument read_metrics(const std::filesystem::path& path) {
  return parse_metrics(read_text_file(path));
}

}  // namespace bodylink
