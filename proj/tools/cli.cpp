// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bodylink/decoder.hpp"
#include "bodylink/encoder.hpp"
#include "bodylink/errors.hpp"
#include "bodylink/io.hpp"
#include "bodylink/metrics.hpp"
#include "bodylink/random.hpp"
#include "bodylink/simulator.hpp"
#include "bodylink/svg.hpp"

namespace bodylink::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  double lambda = 2.0;
  std::vector<int> strides{8, 16, 32};
  std::string preset = "bodyhands";
  std::string schema;  // empty: follow the input file, else the preset
  double body_conf = 0.0, body_iou = 0.0, part_conf = 0.0, part_iou = 0.0;
  CLI::Option* body_conf_opt = nullptr;
  CLI::Option* body_iou_opt = nullptr;
  CLI::Option* part_conf_opt = nullptr;
  CLI::Option* part_iou_opt = nullptr;
  std::vector<std::string> capacity;
  std::uint64_t seed = 0;
  std::string enclosure = "center";
  std::string matcher = "predicted";
};

struct SceneFlags {
  int count = 10;
  int width = 1024, height = 1024;
  int min_bodies = 1, max_bodies = 6;
  double crowding = 0.0, occlusion = 0.0, grid_snap = 8.0;
};

struct NoiseFlags {
  double box_sigma = 0.0, assoc_sigma = 0.0, cls_sigma = 0.0, fp_rate = 0.0, drop_rate = 0.0;
};

void add_scene_flags(CLI::App* cmd, SceneFlags& f) {
  cmd->add_option("--count", f.count, "Number of scenes")->capture_default_str();
  cmd->add_option("--width", f.width, "Image width")->capture_default_str();
  cmd->add_option("--height", f.height, "Image height")->capture_default_str();
  cmd->add_option("--min-bodies", f.min_bodies, "Fewest bodies per scene")->capture_default_str();
  cmd->add_option("--max-bodies", f.max_bodies, "Most bodies per scene")->capture_default_str();
  cmd->add_option("--crowding", f.crowding, "Target IoU between neighboring bodies")->capture_default_str();
  cmd->add_option("--occlusion", f.occlusion, "Chance a body is cut off from below")->capture_default_str();
  cmd->add_option("--grid-snap", f.grid_snap, "Pixel grid for box corners (0 disables)")->capture_default_str();
}

void add_noise_flags(CLI::App* cmd, NoiseFlags& f) {
  cmd->add_option("--box-sigma", f.box_sigma, "Side offset noise, cells")->capture_default_str();
  cmd->add_option("--assoc-sigma", f.assoc_sigma, "Body-center noise, cells")->capture_default_str();
  cmd->add_option("--cls-sigma", f.cls_sigma, "Class logit noise")->capture_default_str();
  cmd->add_option("--fp-rate", f.fp_rate, "Spurious detections per object")->capture_default_str();
  cmd->add_option("--drop-rate", f.drop_rate, "Chance an object is missed")->capture_default_str();
}

ClassSchema resolve_schema(const Globals& g, const std::optional<ClassSchema>& from_input) {
  if (!g.schema.empty()) return ClassSchema::preset(g.schema);
  if (from_input) return *from_input;
  return ClassSchema::preset(g.preset);
}

void check_same_schema(const ClassSchema& a, const ClassSchema& b, const std::string& what) {
  bool same = a.size() == b.size();
  for (int i = 0; same && i < a.size(); ++i) {
    const auto& x = a.classes()[static_cast<std::size_t>(i)];
    const auto& y = b.classes()[static_cast<std::size_t>(i)];
    same = x.name == y.name && x.kind == y.kind;
  }
  if (!same) throw ValidationError(what + " uses a different class schema than the annotations");
}

NmsConfig resolve_nms(const Globals& g) {
  NmsConfig nms;
  if (g.preset == "humanparts")
    nms = NmsConfig::human_parts();
  else if (g.preset == "bodyhands")
    nms = NmsConfig::body_hands();
  else
    throw ValidationError("unknown threshold preset '" + g.preset + "'");
  if (g.body_conf_opt->count() > 0) nms.body_conf = g.body_conf;
  if (g.body_iou_opt->count() > 0) nms.body_iou = g.body_iou;
  if (g.part_conf_opt->count() > 0) nms.part_conf = g.part_conf;
  if (g.part_iou_opt->count() > 0) nms.part_iou = g.part_iou;
  nms.validate();
  return nms;
}

CapacityTable resolve_capacity(const Globals& g, const ClassSchema& schema) {
  CapacityTable table = CapacityTable::defaults(schema);
  for (const auto& entry : g.capacity) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ValidationError("capacity entry '" + entry + "' is not name=N");
    const ClassId id = schema.find(entry.substr(0, eq));
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(entry.substr(eq + 1), &used);
      if (used != entry.size() - eq - 1) throw std::invalid_argument(entry);
    } catch (const std::exception&) {
      throw ValidationError("capacity entry '" + entry + "' has a non-integer count");
    }
    if (n < 1) throw ValidationError("capacity for " + entry.substr(0, eq) + " must be at least 1");
    table.set(id, n);
  }
  return table;
}

DecodeOptions resolve_decode(const Globals& g, const ClassSchema& schema) {
  DecodeOptions d;
  d.nms = resolve_nms(g);
  d.capacity = resolve_capacity(g, schema);
  d.enclosure = g.enclosure == "full" ? Enclosure::full : Enclosure::center;
  d.matcher = g.matcher == "part-center" ? Matcher::part_center : Matcher::predicted_center;
  return d;
}

RunConfig run_config(const Globals& g, const ClassSchema& schema, std::string source) {
  RunConfig c;
  c.lambda = g.lambda;
  c.strides = g.strides;
  c.nms = resolve_nms(g);
  const auto cap = resolve_capacity(g, schema);
  c.capacity.push_back(0);
  for (const auto& info : schema.classes()) c.capacity.push_back(cap[info.id]);
  c.enclosure = g.enclosure;
  c.matcher = g.matcher == "part-center" ? "part_center" : "predicted_center";
  c.source = std::move(source);
  return c;
}

std::vector<FeatureLevel> levels_for(const SceneAnnotation& s, const Globals& g) {
  return make_levels(s.width, s.height, g.strides);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_text_file(path, text);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string annotations, out;
};

int cmd_encode(const Globals& g, const EncodeArgs& a, std::ostream& out, std::ostream& err) {
  const AnnotationSet set = load_annotations(a.annotations);
  if (set.resolution.resolved > 0)
    err << "resolved " << set.resolution.resolved << " parent link(s), " << set.resolution.ambiguous
        << " ambiguous\n";
  const ClassSchema schema = set.schema;
  DumpManifest manifest;
  manifest.lambda = g.lambda;
  manifest.classes = schema.classes();
  manifest.content = "targets";
  DumpWriter writer(a.out, manifest);
  for (const auto& scene : set.scenes) {
    const auto levels = levels_for(scene, g);
    writer.write(scene.image_id, target_maps(encode_scene(scene, levels, g.lambda, schema), schema));
  }
  writer.close();
  out << "encoded " << set.scenes.size() << " image(s) into " << a.out << "\n";
  return kOk;
}

struct DecodeArgs {
  std::string dump, out;
};

int cmd_decode(const Globals& g, const DecodeArgs& a, std::ostream& out) {
  DumpReader reader(a.dump);
  if (reader.manifest().content != "predictions")
    throw ValidationError(a.dump + " holds " + reader.manifest().content + ", not predictions");
  const ClassSchema schema = resolve_schema(g, reader.manifest().schema());
  check_same_schema(schema, reader.manifest().schema(), a.dump);
  const DecodeOptions opts = resolve_decode(g, schema);
  std::vector<ImageDetections> images;
  while (auto rec = reader.next()) images.push_back({rec->image_id, decode_pipeline(rec->maps, schema, opts)});
  emit(a.out, detections_to_json(images, schema), out);
  return kOk;
}

struct EvalArgs {
  std::string annotations, dump, detections, out;
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const AnnotationSet set = load_annotations(a.annotations);
  const ClassSchema schema = set.schema;
  std::map<std::int64_t, std::vector<PredictedObject>> by_image;
  std::string source;
  std::optional<double> dump_lambda;
  if (!a.dump.empty()) {
    DumpReader reader(a.dump);
    if (reader.manifest().content != "predictions")
      throw ValidationError(a.dump + " holds " + reader.manifest().content + ", not predictions");
    check_same_schema(schema, reader.manifest().schema(), a.dump);
    dump_lambda = reader.manifest().lambda;
    const DecodeOptions opts = resolve_decode(g, schema);
    while (auto rec = reader.next()) {
      const auto res = decode_pipeline(rec->maps, schema, opts);
      by_image[rec->image_id] = make_eval_image({}, res).predictions;
    }
    source = fs::path(a.dump).filename().string();
  } else {
    for (auto& ip : read_detections(a.detections, schema)) by_image[ip.image_id] = std::move(ip.predictions);
    source = fs::path(a.detections).filename().string();
  }

  std::vector<EvalImage> images;
  for (const auto& scene : set.scenes) {
    EvalImage img{scene, {}};
    if (auto it = by_image.find(scene.image_id); it != by_image.end()) {
      img.predictions = std::move(it->second);
      by_image.erase(it);
    }
    images.push_back(std::move(img));
  }
  if (!by_image.empty())
    throw ValidationError("predictions for image " + std::to_string(by_image.begin()->first) +
                          " have no matching annotations");

  MetricsDocument doc;
  doc.config = run_config(g, schema, source);
  // Decoding uses the scale recorded with the dump.
  if (dump_lambda) doc.config.lambda = *dump_lambda;
  doc.report = evaluate(images, schema);
  emit(a.out, metrics_to_json(doc), out);
  if (!a.out.empty()) {
    out << "images " << doc.report.num_images << "  conditional accuracy "
        << fmt_opt(doc.report.conditional_accuracy) << "  joint AP " << fmt_opt(doc.report.joint_ap) << "\n";
    for (const auto& c : doc.report.classes)
      out << "  " << c.name << ": AP50 " << fmt_opt(c.ap50) << "  MR-2 " << fmt_opt(c.mr2)
          << (c.kind == ClassKind::part ? "  mMR-2 " + fmt_opt(c.mmr2) : std::string()) << "\n";
  }
  return kOk;
}

struct SimulateArgs {
  std::string out_dir;
  SceneFlags scene;
  NoiseFlags noise;
  int dfl_bins = 0;
  std::string positives = "aligned";
};

SceneSpec scene_spec(const SceneFlags& f, const ClassSchema& schema, std::uint64_t seed) {
  SceneSpec spec = SceneSpec::defaults_for(schema);
  spec.width = f.width;
  spec.height = f.height;
  spec.min_bodies = f.min_bodies;
  spec.max_bodies = f.max_bodies;
  spec.crowding = f.crowding;
  spec.occlusion = f.occlusion;
  spec.grid_snap = f.grid_snap;
  spec.seed = seed;
  return spec;
}

NoiseSpec noise_spec(const NoiseFlags& f, std::uint64_t seed) {
  NoiseSpec n;
  n.box_sigma = f.box_sigma;
  n.assoc_sigma = f.assoc_sigma;
  n.cls_sigma = f.cls_sigma;
  n.false_positive_rate = f.fp_rate;
  n.drop_rate = f.drop_rate;
  n.seed = seed;
  return n;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
  const ClassSchema schema = resolve_schema(g, std::nullopt);
  const SceneSpec spec = scene_spec(a.scene, schema, g.seed);
  const NoiseSpec base_noise = noise_spec(a.noise, derive_seed(g.seed, 1));
  base_noise.validate();
  RenderOptions ro;
  ro.dfl_bins = a.dfl_bins;
  ro.positives = a.positives == "all" ? PositiveSet::all_candidates : PositiveSet::aligned_top_k;

  const auto corpus = generate_corpus(spec, schema, a.scene.count);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create directory " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);
  write_annotations(dir / "annotations.json", corpus, schema);

  std::optional<DumpWriter> writer;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    NoiseSpec n = base_noise;
    n.seed = derive_seed(base_noise.seed, i);
    const auto r = render_predictions(corpus[i], levels_for(corpus[i], g), g.lambda, n, schema, ro);
    if (!writer) writer.emplace(dir / "predictions.pbad", DumpManifest::for_maps(r.maps, schema));
    writer->write(corpus[i].image_id, r.maps);
  }
  if (!writer) {
    DumpManifest m;
    m.lambda = g.lambda;
    m.dfl_bins = a.dfl_bins;
    m.classes = schema.classes();
    writer.emplace(dir / "predictions.pbad", m);
  }
  writer->close();
  std::size_t objects = 0;
  for (const auto& s : corpus) objects += s.objects.size();
  out << "simulated " << corpus.size() << " scene(s), " << objects << " object(s) into " << a.out_dir << "\n";
  return kOk;
}

struct AblateArgs {
  SceneFlags scene;
  NoiseFlags noise;
  std::string out;
};

int cmd_ablate(const Globals& g, const AblateArgs& a, std::ostream& out) {
  const ClassSchema schema = resolve_schema(g, std::nullopt);
  AblationConfig cfg;
  cfg.scene = scene_spec(a.scene, schema, g.seed);
  cfg.noise = noise_spec(a.noise, derive_seed(g.seed, 1));
  cfg.corpus_size = a.scene.count;
  cfg.strides = g.strides;
  cfg.lambda = g.lambda;
  const DecodeOptions d = resolve_decode(g, schema);
  cfg.nms = d.nms;
  cfg.enclosure = d.enclosure;

  MetricsDocument doc;
  doc.config = run_config(g, schema, "ablation");
  doc.config.seed = g.seed;
  doc.ablation = ablation_suite(cfg, schema);
  if (!a.out.empty()) write_metrics(a.out, doc);

  out << "variant          cond.acc  joint AP  part AP   mMR-2\n";
  for (const auto& r : doc.ablation->rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-16s %-9s %-9s %-9s %s\n", r.name.c_str(),
                  fmt_opt(r.conditional_accuracy).c_str(), fmt_opt(r.joint_ap).c_str(),
                  fmt_opt(r.part_ap).c_str(), fmt_opt(r.mmr2).c_str());
    out << line;
  }
  return kOk;
}

struct RenderArgs {
  std::string annotations, dump, out;
  std::optional<std::int64_t> image;
};

int cmd_render(const Globals& g, const RenderArgs& a, std::ostream& out) {
  std::optional<AnnotationSet> set;
  if (!a.annotations.empty()) set = load_annotations(a.annotations);
  auto pick = [&](std::int64_t id) { return !a.image || *a.image == id; };

  std::string svg;
  if (!a.dump.empty()) {
    DumpReader reader(a.dump);
    const ClassSchema schema = resolve_schema(g, reader.manifest().schema());
    const DecodeOptions opts = resolve_decode(g, schema);
    std::optional<DumpRecord> rec;
    while ((rec = reader.next()) && !pick(rec->image_id)) {
    }
    if (!rec) throw ValidationError("no image" + (a.image ? " " + std::to_string(*a.image) : "") + " in " + a.dump);
    const auto& l0 = rec->maps.levels.front().level;
    int width = l0.width * l0.stride, height = l0.height * l0.stride;
    if (set)
      for (const auto& s : set->scenes)
        if (s.image_id == rec->image_id) width = s.width, height = s.height;
    svg = render_svg(width, height, decode_pipeline(rec->maps, schema, opts), schema);
  } else {
    const SceneAnnotation* scene = nullptr;
    for (const auto& s : set->scenes)
      if (pick(s.image_id)) {
        scene = &s;
        break;
      }
    if (!scene)
      throw ValidationError("no image" + (a.image ? " " + std::to_string(*a.image) : "") + " in " + a.annotations);
    svg = render_svg(*scene, set->schema);
  }
  emit(a.out, svg, out);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Part-body association detection: encode, decode, evaluate, simulate.", "bodylink"};
  app.set_version_flag("--version", std::string(library_version()));
  app.set_config("--config", "", "TOML or INI file with option values; flags override it");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--lambda", g.lambda, "Association offset scale")->capture_default_str();
  app.add_option("--strides", g.strides, "Feature strides, increasing")->delimiter(',')->capture_default_str();
  app.add_option("--preset", g.preset, "Threshold preset")
      ->check(CLI::IsMember({"bodyhands", "humanparts"}))
      ->capture_default_str();
  app.add_option("--schema", g.schema, "Class schema preset (defaults to the input file or --preset)")
      ->check(CLI::IsMember({"bodyhands", "humanparts", "body-face-hands"}));
  g.body_conf_opt = app.add_option("--body-conf", g.body_conf, "Body confidence threshold");
  g.body_iou_opt = app.add_option("--body-iou", g.body_iou, "Body NMS IoU threshold");
  g.part_conf_opt = app.add_option("--part-conf", g.part_conf, "Part confidence threshold");
  g.part_iou_opt = app.add_option("--part-iou", g.part_iou, "Part NMS IoU threshold");
  app.add_option("--capacity", g.capacity, "Per-body capacity override, name=N (repeatable)");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--enclosure", g.enclosure, "Part-in-body test")
      ->check(CLI::IsMember({"center", "full"}))
      ->capture_default_str();
  app.add_option("--matcher", g.matcher, "Association distance")
      ->check(CLI::IsMember({"predicted", "part-center"}))
      ->capture_default_str();

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Annotations to a dense target dump");
  encode->add_option("--annotations", enc.annotations, "Annotation JSON")->required();
  encode->add_option("--out", enc.out, "Output dump path")->required();

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Prediction dump to detections JSON");
  decode->add_option("--dump", dec.dump, "Prediction dump")->required();
  decode->add_option("--out", dec.out, "Output JSON (stdout when omitted)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate predictions against annotations");
  eval->add_option("--annotations", ev.annotations, "Annotation JSON")->required();
  auto* ev_dump = eval->add_option("--dump", ev.dump, "Prediction dump");
  auto* ev_det = eval->add_option("--detections", ev.detections, "Decoded detections JSON");
  ev_dump->excludes(ev_det);
  eval->add_option("--out", ev.out, "Metrics JSON (stdout when omitted)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus and prediction dump");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  add_scene_flags(simulate, sim.scene);
  add_noise_flags(simulate, sim.noise);
  simulate->add_option("--dfl-bins", sim.dfl_bins, "Distribution bins per side (0: direct offsets)")
      ->capture_default_str();
  simulate->add_option("--positives", sim.positives, "Which anchors fire")
      ->check(CLI::IsMember({"aligned", "all"}))
      ->capture_default_str();

  AblateArgs abl;
  abl.scene.count = 50;
  abl.scene.crowding = 0.5;
  abl.noise.assoc_sigma = 1.0;
  auto* ablate = app.add_subcommand("ablate", "Compare pipeline variants on one corpus");
  add_scene_flags(ablate, abl.scene);
  add_noise_flags(ablate, abl.noise);
  ablate->add_option("--out", abl.out, "Metrics JSON with the ablation table");

  RenderArgs ren;
  std::int64_t image_id = 0;
  auto* render = app.add_subcommand("render", "Draw annotations or decoded detections as SVG");
  auto* r_ann = render->add_option("--annotations", ren.annotations, "Annotation JSON");
  auto* r_dump = render->add_option("--dump", ren.dump, "Prediction dump");
  auto* r_img = render->add_option("--image", image_id, "Image id (default: first)");
  render->add_option("--out", ren.out, "Output SVG (stdout when omitted)");

  for (auto* sub : {encode, decode, eval, simulate, ablate, render}) sub->fallthrough();

  try {
    app.parse(argc, argv);
    if (eval->parsed() && ev.dump.empty() && ev.detections.empty())
      throw CLI::RequiredError("eval needs --dump or --detections");
    if (render->parsed() && r_ann->count() == 0 && r_dump->count() == 0)
      throw CLI::RequiredError("render needs --annotations or --dump");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << library_version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kValidationFailure;
  }
  if (r_img->count() > 0) ren.image = image_id;

  try {
    if (!(g.lambda > 0.0)) throw ValidationError("--lambda must be positive");
    if (encode->parsed()) return cmd_encode(g, enc, out, err);
    if (decode->parsed()) return cmd_decode(g, dec, out);
    if (eval->parsed()) return cmd_eval(g, ev, out);
    if (simulate->parsed()) return cmd_simulate(g, sim, out);
    if (ablate->parsed()) return cmd_ablate(g, abl, out);
    if (render->parsed()) return cmd_render(g, ren, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kValidationFailure;
}

}  // namespace bodylink::cli
