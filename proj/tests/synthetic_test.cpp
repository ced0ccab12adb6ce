#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tunegain/synthetic.hpp"

using namespace tunegain;

namespace {

LandscapeSpec only(Archetype a, std::size_t n) {
  LandscapeSpec s;
  s.n_classes = n;
  s.insensitive_fraction = a == Archetype::insensitive;
  s.sparse_fraction = a == Archetype::sparse;
  s.tunable_fraction = a == Archetype::tunable;
  return s;
}

}  // namespace

TEST(Synthetic, InsensitiveNoiseFreeHasZeroGain) {
  auto spec = only(Archetype::insensitive, 12);
  spec.seed_noise = 0;
  auto d = generate(spec, builtin_space());
  for (const auto& g : d.gains) EXPECT_EQ(g.gain, 0.0);
}

TEST(Synthetic, SparseClosedForm) {
  auto spec = only(Archetype::sparse, 1);
  spec.seed_noise = 0;
  spec.seeds_per_pair = 1;
  spec.base_min = spec.base_max = 100;
  spec.boost_min = spec.boost_max = 50;
  spec.n_sparse_configs = 3;
  auto space = builtin_space();
  auto d = generate(spec, space);
  const auto& g = d.gains[0];
  const double p = 3.0 / 1200.0;
  EXPECT_DOUBLE_EQ(g.sparsity, 50.0);
  EXPECT_NEAR(g.variation, 50.0 * std::sqrt(p * (1 - p)), 1e-9);
  EXPECT_NEAR(g.gain, 2500.0 * std::sqrt(p * (1 - p)), 1e-9);
  // The default configuration is never one of the boosted points.
  EXPECT_EQ(d.matrix.ground_truth(0, space.config_id(space.default_config())), 100.0);
  EXPECT_EQ(d.matrix.best_extra(d.matrix.classes()[0]), 50.0);
}

TEST(Synthetic, Deterministic) {
  LandscapeSpec spec;
  spec.n_classes = 20;
  auto a = generate(spec, builtin_space());
  auto b = generate(spec, builtin_space(), 4);
  EXPECT_EQ(a.matrix.to_csv(), b.matrix.to_csv());
  EXPECT_EQ(features_to_csv(a.features), features_to_csv(b.features));
  EXPECT_EQ(gains_to_csv(a.gains), gains_to_csv(b.gains));
  spec.seed = 2;
  EXPECT_NE(generate(spec, builtin_space()).matrix.to_csv(), a.matrix.to_csv());
}

TEST(Synthetic, MatrixRoundTripsThroughCsv) {
  LandscapeSpec spec;
  spec.n_classes = 8;
  auto space = builtin_space();
  auto d = generate(spec, space);
  EXPECT_TRUE(CoverageMatrix::parse(d.matrix.to_csv(), space) == d.matrix);
  EXPECT_EQ(d.matrix.record_count(), 8u * 1200u * 3u);
}

TEST(Synthetic, ZeroGainFractionMatchesInsensitiveFraction) {
  LandscapeSpec spec;
  spec.n_classes = 50;
  spec.seed_noise = 0;
  auto d = generate(spec, builtin_space());
  std::size_t zero = 0, insensitive = 0;
  for (std::size_t c = 0; c < 50; ++c) {
    zero += d.gains[c].gain == 0.0;
    insensitive += d.archetypes[c] == Archetype::insensitive;
  }
  EXPECT_EQ(insensitive, 20u);
  EXPECT_EQ(zero, insensitive);
}

TEST(Synthetic, FeatureSchema) {
  LandscapeSpec spec;
  spec.n_classes = 10;
  auto d = generate(spec, builtin_space());
  EXPECT_EQ(d.features.names.size(), 30u);
  EXPECT_EQ(d.features.names[0], "archetype_code");
  ASSERT_EQ(d.features.rows.size(), 10u);
  for (std::size_t c = 0; c < 10; ++c) {
    EXPECT_EQ(d.features.rows[c].class_id, d.matrix.classes()[c]);
    EXPECT_EQ(d.features.rows[c].features.size(), 30u);
  }
}

TEST(Synthetic, Validation) {
  auto space = builtin_space();
  LandscapeSpec s;
  s.sparse_fraction = 0.5;
  EXPECT_THROW(generate(s, space), Error);
  s = LandscapeSpec{};
  s.n_sparse_configs = 1200;
  EXPECT_THROW(generate(s, space), Error);
  s = LandscapeSpec{};
  s.seeds_per_pair = 0;
  EXPECT_THROW(generate(s, space), Error);
  s = LandscapeSpec{};
  s.insensitive_fraction = -0.1;
  s.tunable_fraction = 0.9;
  EXPECT_THROW(generate(s, space), Error);
}

TEST(Synthetic, Apportion) {
  EXPECT_EQ(detail::apportion(200, {0.4, 0.2, 0.4}), (std::vector<std::size_t>{80, 40, 80}));
  EXPECT_EQ(detail::apportion(7, {0.5, 0.5, 0.0}), (std::vector<std::size_t>{4, 3, 0}));
  auto c = detail::apportion(10, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), 10u);
}

TEST(Synthetic, GainsAreLearnableFromFeatures) {
  LandscapeSpec spec;
  auto d = generate(spec, builtin_space());
  auto data = make_dataset(d.features, d.matrix.classes(), gain_map(d.gains));
  std::vector<std::size_t> train(150), test(50);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), 150);
  auto m = fit_forest(data.select_rows(train), ForestParams{}, 1);
  auto held = data.select_rows(test);
  EXPECT_GE(r_squared(held.targets(), m.predict(held)), 0.7);
}
