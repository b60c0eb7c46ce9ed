// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "bodylink/assignment.hpp"
#include "bodylink/decoder.hpp"
#include "bodylink/encoder.hpp"
#include "bodylink/simulator.hpp"

namespace {

using namespace bodylink;

struct Fixture {
  ClassSchema schema = ClassSchema::body_hands();
  std::vector<FeatureLevel> levels;
  SceneAnnotation scene;
  Rendering rendering;

  explicit Fixture(double crowding) {
    const int strides[] = {8, 16, 32};
    levels = make_levels(1024, 1024, strides);
    SceneSpec spec = SceneSpec::defaults_for(schema);
    spec.min_bodies = spec.max_bodies = 12;
    spec.crowding = crowding;
    spec.seed = 11;
    scene = generate_scene(spec, schema);
    NoiseSpec noise;
    noise.cls_sigma = 0.5;
    noise.assoc_sigma = 0.5;
    noise.false_positive_rate = 0.3;
    noise.seed = 5;
    rendering = render_predictions(scene, levels, 2.0, noise, schema);
  }
};

const Fixture& fixture() {
  static const Fixture f(0.3);
  return f;
}

void BM_DecodeBoxes(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(decode_boxes(f.rendering.maps, f.schema, 0.05));
}
BENCHMARK(BM_DecodeBoxes)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
  const auto& f = fixture();
  const auto dets = decode_boxes(f.rendering.maps, f.schema, 0.05);
  state.counters["candidates"] = static_cast<double>(dets.size());
  for (auto _ : state) benchmark::DoNotOptimize(nms(dets, NmsConfig{}, f.schema));
}
BENCHMARK(BM_Nms)->Unit(benchmark::kMicrosecond);

void BM_MatchParts(benchmark::State& state) {
  const auto& f = fixture();
  const auto res = decode_pipeline(f.rendering.maps, f.schema, {});
  const auto cap = CapacityTable::defaults(f.schema);
  state.counters["bodies"] = static_cast<double>(res.bodies.size());
  state.counters["parts"] = static_cast<double>(res.parts.size());
  for (auto _ : state) benchmark::DoNotOptimize(match_parts(res.bodies, res.parts, cap, Enclosure::center));
}
BENCHMARK(BM_MatchParts)->Unit(benchmark::kMicrosecond);

void BM_DecodePipeline(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(decode_pipeline(f.rendering.maps, f.schema, {}));
}
BENCHMARK(BM_DecodePipeline)->Unit(benchmark::kMillisecond);

void BM_EncodeScene(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(encode_scene(f.scene, f.levels, 2.0, f.schema));
}
BENCHMARK(BM_EncodeScene)->Unit(benchmark::kMillisecond);

void BM_Assign(benchmark::State& state) {
  const auto& f = fixture();
  const auto targets = encode_scene(f.scene, f.levels, 2.0, f.schema);
  for (auto _ : state) benchmark::DoNotOptimize(assign(f.rendering.maps, targets, AlignmentConfig{}));
}
BENCHMARK(BM_Assign)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
