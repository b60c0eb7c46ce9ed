// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "bodylink/errors.hpp"
#include "bodylink/io.hpp"
#include "bodylink/random.hpp"
#include "bodylink/simulator.hpp"

using namespace bodylink;

namespace {

const int kStrides[] = {8, 16, 32};

MetricsReport run_corpus(const std::vector<SceneAnnotation>& corpus, const ClassSchema& schema,
                         const NoiseSpec& noise) {
  std::vector<EvalImage> imgs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    const auto levels = make_levels(s.width, s.height, kStrides);
    NoiseSpec n = noise;
    n.seed = derive_seed(noise.seed, i);
    const auto r = render_predictions(s, levels, 2.0, n, schema);
    imgs.push_back(make_eval_image(s, decode_pipeline(r.maps, schema, {})));
  }
  return evaluate(imgs, schema);
}

}  // namespace

TEST(Rng, DeterministicStreams) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const int k = r.uniform_int(-2, 2);
    EXPECT_GE(k, -2);
    EXPECT_LE(k, 2);
  }
}

// One body with every part forced on yields one part per class, all parented to it.
TEST(GenerateScene, SingleBodyAllParts) {
  const auto schema = ClassSchema::human_parts();
  auto spec = SceneSpec::defaults_for(schema);
  spec.min_bodies = spec.max_bodies = 1;
  for (auto& p : spec.parts) {
    p.probability = 1.0;
    p.count = 1;
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    const auto s = generate_scene(spec, schema);
    ASSERT_EQ(s.objects.size(), 1u + schema.part_classes().size()) << "seed " << seed;
    EXPECT_EQ(s.objects[0].cls, schema.body_class());
    for (std::size_t i = 1; i < s.objects.size(); ++i) {
      EXPECT_EQ(s.objects[i].parent, 0u);
      EXPECT_EQ(s.objects[i].cls, schema.part_classes()[i - 1]);
    }
  }
}

TEST(GenerateScene, SameSeedSameScene) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 99;
  spec.crowding = 0.4;
  const auto a = generate_corpus(spec, schema, 10);
  const auto b = generate_corpus(spec, schema, 10);
  EXPECT_EQ(annotations_to_json(a, schema), annotations_to_json(b, schema));
  spec.seed = 100;
  EXPECT_NE(annotations_to_json(generate_corpus(spec, schema, 10), schema),
            annotations_to_json(a, schema));
}

// Generated scenes always pass encoder validation.
TEST(GenerateScene, ScenesAreValid) {
  for (const auto* name : {"bodyhands", "humanparts", "body-face-hands"}) {
    const auto schema = ClassSchema::preset(name);
    auto spec = SceneSpec::defaults_for(schema);
    spec.seed = 5;
    spec.crowding = 0.5;
    spec.occlusion = 0.3;
    for (const auto& s : generate_corpus(spec, schema, 100)) {
      EXPECT_NO_THROW(validate_scene(s, schema));
      for (const auto& o : s.objects) {
        EXPECT_GE(o.box.x_l, 0.0);
        EXPECT_LE(o.box.x_r, s.width);
        EXPECT_LE(o.box.y_b, s.height);
      }
    }
  }
}

TEST(GenerateScene, InfeasibleSpecs) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.parts[0].max_size = 1.2;
  EXPECT_THROW(generate_scene(spec, schema), ValidationError);
  spec = SceneSpec::defaults_for(schema);
  spec.body_max_width = 2000;
  EXPECT_THROW(generate_scene(spec, schema), ValidationError);
  spec = SceneSpec::defaults_for(schema);
  spec.parts[0].probability = 1.5;
  EXPECT_THROW(generate_scene(spec, schema), ValidationError);
}

// Measured mean body IoU tracks the requested crowding over 1000 scenes.
TEST(GenerateScene, CrowdingIsCalibrated) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 17;
  for (double target : {0.3, 0.5}) {
    spec.crowding = target;
    const auto corpus = generate_corpus(spec, schema, 1000);
    const auto measured = measured_crowding(corpus, schema);
    ASSERT_TRUE(measured.has_value());
    EXPECT_NEAR(*measured, target, 0.05);
  }
}

// Noiseless rendering decodes to perfect association metrics.
TEST(RenderPredictions, NoiselessRoundTrip) {
  const auto schema = ClassSchema::human_parts();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 23;
  spec.crowding = 0.3;
  const auto rep = run_corpus(generate_corpus(spec, schema, 40), schema, NoiseSpec{});
  EXPECT_EQ(rep.conditional_accuracy, 1.0);
  EXPECT_EQ(rep.joint_ap, 1.0);
  for (const auto& c : rep.classes) EXPECT_EQ(c.ap50, 1.0) << c.name;
}

// The middle part loses every fine cell to its neighbors, yet still fires.
TEST(RenderPredictions, EveryObjectFires) {
  const auto schema = ClassSchema::human_parts();
  SceneAnnotation s;
  s.width = s.height = 512;
  s.objects.push_back({{160, 0, 400, 400}, schema.body_class(), std::nullopt, std::nullopt});
  s.objects.push_back({{288, 96, 304, 112}, ClassId{4}, 0, std::nullopt});
  s.objects.push_back({{280, 96, 304, 112}, ClassId{5}, 0, std::nullopt});
  s.objects.push_back({{264, 96, 280, 112}, ClassId{4}, 0, std::nullopt});
  const auto levels = make_levels(s.width, s.height, kStrides);
  const auto r = render_predictions(s, levels, 2.0, NoiseSpec{}, schema);
  const AnchorLayout layout(levels);
  for (std::int32_t g = 0; g < 4; ++g) {
    bool fires = false;
    for (std::size_t i = 0; i < r.anchor_owner.size(); ++i) {
      if (r.anchor_owner[i] != g) continue;
      const auto a = layout.anchor(i);
      const auto& lm = r.maps.levels[static_cast<std::size_t>(a.level)];
      fires = fires || lm.cls[static_cast<std::size_t>(s.objects[static_cast<std::size_t>(g)].cls.channel()) *
                                  lm.plane() + lm.level.cell_index(a.cell)] > 0.0;
    }
    EXPECT_TRUE(fires) << "object " << g;
  }
}

TEST(RenderPredictions, DropEverything) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 2;
  const auto s = generate_scene(spec, schema);
  const auto levels = make_levels(s.width, s.height, kStrides);
  NoiseSpec noise;
  noise.drop_rate = 1.0;
  const auto r = render_predictions(s, levels, 2.0, noise, schema);
  const auto out = decode_pipeline(r.maps, schema, {});
  EXPECT_TRUE(out.bodies.empty());
  EXPECT_TRUE(out.parts.empty());
}

TEST(RenderPredictions, DeterministicGivenSeed) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 3;
  const auto s = generate_scene(spec, schema);
  const auto levels = make_levels(s.width, s.height, kStrides);
  const NoiseSpec noise{1.0, 1.0, 0.5, 0.2, 0.1, 77};
  const auto a = render_predictions(s, levels, 2.0, noise, schema);
  const auto b = render_predictions(s, levels, 2.0, noise, schema);
  for (std::size_t li = 0; li < a.maps.levels.size(); ++li) {
    EXPECT_EQ(a.maps.levels[li].box, b.maps.levels[li].box);
    EXPECT_EQ(a.maps.levels[li].cls, b.maps.levels[li].cls);
    EXPECT_EQ(a.maps.levels[li].assoc, b.maps.levels[li].assoc);
  }
  EXPECT_EQ(a.anchor_owner, b.anchor_owner);
  EXPECT_THROW(render_predictions(s, levels, 2.0, NoiseSpec{-1, 0, 0, 0, 0, 0}, schema), ValidationError);
}

// Conditional accuracy does not rise as association noise grows.
TEST(RenderPredictions, AssocNoiseSweepIsMonotone) {
  const auto schema = ClassSchema::body_hands();
  auto spec = SceneSpec::defaults_for(schema);
  spec.seed = 31;
  spec.crowding = 0.5;
  const auto corpus = generate_corpus(spec, schema, 60);
  double prev = 2.0;
  for (double sigma : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    NoiseSpec noise;
    noise.assoc_sigma = sigma;
    noise.seed = 8;
    const double acc = *run_corpus(corpus, schema, noise).conditional_accuracy;
    EXPECT_LE(acc, prev) << "sigma " << sigma;
    prev = acc;
  }
  EXPECT_LT(prev, 1.0);
}

// Without noise every predicted-center variant is perfect; the part-center
// baseline is not, since crowded bodies overlap.
TEST(AblationSuite, NoiselessAllPerfect) {
  const auto schema = ClassSchema::body_hands();
  AblationConfig cfg;
  cfg.scene = SceneSpec::defaults_for(schema);
  cfg.scene.seed = 4;
  cfg.scene.crowding = 0.5;
  cfg.corpus_size = 15;
  const auto rep = ablation_suite(cfg, schema);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& row : rep.rows) {
    if (row.name == "baseline") {
      EXPECT_LT(*row.conditional_accuracy, 1.0);
      continue;
    }
    EXPECT_EQ(row.conditional_accuracy, 1.0) << row.name;
    EXPECT_EQ(row.joint_ap, 1.0) << row.name;
  }
  EXPECT_EQ(rep.row("full").name, "full");
  EXPECT_THROW(rep.row("nope"), std::out_of_range);
}

// Under association noise the full pipeline beats the part-center baseline.
TEST(AblationSuite, NoisyDirection) {
  const auto schema = ClassSchema::body_hands();
  AblationConfig cfg;
  cfg.scene = SceneSpec::defaults_for(schema);
  cfg.scene.seed = 1000;
  cfg.scene.crowding = 0.5;
  cfg.noise.assoc_sigma = 1.0;
  cfg.noise.seed = 5000;
  cfg.corpus_size = 30;
  const auto rep = ablation_suite(cfg, schema);
  EXPECT_GT(*rep.row("full").conditional_accuracy, *rep.row("baseline").conditional_accuracy);
}
