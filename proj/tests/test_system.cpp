#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <utility>

#include "hdrexp/simulator.hpp"
#include "hdrexp/system.hpp"

namespace hdrexp {
namespace {

// Tile with n exposures over the given per-exposure sample values; validity uses the default range.
TileSamples make_tile(const std::vector<std::vector<double>>& values) {
  TileSamples tile;
  const ValidRange range;
  for (const auto& row : values) {
    Eigen::ArrayXd v = Eigen::Map<const Eigen::ArrayXd>(row.data(), static_cast<Index>(row.size()));
    Eigen::Array<bool, Eigen::Dynamic, 1> ok(v.size());
    for (Index s = 0; s < v.size(); ++s) ok(s) = range.contains(v(s));
    tile.values.push_back(v);
    tile.valid.push_back(ok);
  }
  return tile;
}

auto free_weight(const TileSamples& tile) {
  return [&tile](int i, int j, Index s) {
    return row_weight_calibration_free(tile.values[static_cast<std::size_t>(i)](s),
                                       tile.values[static_cast<std::size_t>(j)](s));
  };
}

ExposureStack constant_stack(const std::vector<float>& levels, Index h = 40, Index w = 24) {
  std::vector<ImageF> images;
  std::vector<CaptureMetadata> meta;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    images.emplace_back(h, w, 3, levels[k]);
    CaptureMetadata m;
    m.exposure_time = std::ldexp(1.0, static_cast<int>(k));
    meta.push_back(m);
  }
  return ExposureStack(std::move(images), std::move(meta));
}

TEST(TileGridTest, CoversImageWithSmallerEdgeTiles) {
  const auto tiles = tile_grid(33, 20, 16);
  ASSERT_EQ(tiles.size(), 6u);
  EXPECT_EQ(tiles[1].col, 16);
  EXPECT_EQ(tiles[1].width, 4);
  EXPECT_EQ(tiles[4].row, 32);
  EXPECT_EQ(tiles[4].height, 1);
  Index area = 0;
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    EXPECT_EQ(tiles[k].id, static_cast<Index>(k));
    area += tiles[k].height * tiles[k].width;
  }
  EXPECT_EQ(area, 33 * 20);
  EXPECT_EQ(tile_grid(16, 16, 16).size(), 1u);
  EXPECT_THROW(tile_grid(8, 8, 0), DomainError);
}

TEST(ValidityTest, ThresholdsAreExclusive) {
  ImageF img(1, 4, 1);
  img(0, 0) = 10.0f;
  img(0, 1) = 10.5f;
  img(0, 2) = 950.0f;
  img(0, 3) = 949.0f;
  const Mask m = validity_mask(img, 1000.0, {});
  EXPECT_FALSE(m(0, 0));
  EXPECT_TRUE(m(0, 1));
  EXPECT_FALSE(m(0, 2));
  EXPECT_TRUE(m(0, 3));
  EXPECT_THROW(validity_mask(img, 1.0, {0.5, 0.4}), DomainError);
}

TEST(GreedyMstTest, EdgeJumpsToLongestValidExposure) {
  // Sample 0 is the best for (0, 1) and still valid in exposure 2; sample 1 is saturated there.
  const TileSamples tile = make_tile({{0.20, 0.05}, {0.40, 0.10}, {0.80, 0.99}});
  const auto tree = greedy_mst(tile, free_weight(tile));
  ASSERT_EQ(tree.size(), 2u);
  EXPECT_EQ(tree[0].i, 0);
  EXPECT_EQ(tree[0].j, 2);
  EXPECT_EQ(tree[0].sample, 0);
  EXPECT_DOUBLE_EQ(tree[0].weight, row_weight_calibration_free(0.20, 0.80));
  EXPECT_EQ(tree[1].i, 1);
  EXPECT_EQ(tree[1].j, 2);
  EXPECT_EQ(tree[1].sample, 0);
}

TEST(GreedyMstTest, StopsAtSaturationAndPairwiseStaysAdjacent) {
  // The best (0, 1) sample saturates in exposure 2, so the greedy edge ends at exposure 1.
  const TileSamples tile = make_tile({{0.30, 0.02}, {0.60, 0.04}, {0.97, 0.08}});
  const auto greedy = greedy_mst(tile, free_weight(tile));
  ASSERT_EQ(greedy.size(), 2u);
  EXPECT_EQ(greedy[0].j, 1);
  EXPECT_EQ(greedy[0].sample, 0);
  EXPECT_EQ(greedy[1].i, 1);
  EXPECT_EQ(greedy[1].sample, 1);

  const auto pairwise = greedy_mst(tile, free_weight(tile), Connectivity::pairwise);
  for (const TreeEdge& e : pairwise) EXPECT_EQ(e.j, e.i + 1);
}

TEST(GreedyMstTest, ReportsPairsWithoutJointlyValidSamples) {
  const TileSamples tile = make_tile({{0.5, 0.5}, {0.99, 0.99}, {0.99, 0.99}});
  const TreeSet set = greedy_msts(tile, free_weight(tile), 3, Connectivity::greedy);
  EXPECT_EQ(set.missing_pairs, (std::vector<int>{0, 1}));
  EXPECT_TRUE(set.trees.empty());
}

TEST(GreedyMstTest, KTreesAreEdgeDisjointAndRankedByWeight) {
  std::vector<std::vector<double>> values(3, std::vector<double>(12));
  for (int s = 0; s < 12; ++s) {
    values[0][static_cast<std::size_t>(s)] = 0.02 + 0.01 * ((s * 7) % 12);
    values[1][static_cast<std::size_t>(s)] = 2.0 * values[0][static_cast<std::size_t>(s)];
    values[2][static_cast<std::size_t>(s)] = 4.0 * values[0][static_cast<std::size_t>(s)];
  }
  const TileSamples tile = make_tile(values);
  const TreeSet set = greedy_msts(tile, free_weight(tile), 5, Connectivity::greedy);
  ASSERT_EQ(set.trees.size(), 5u);
  std::set<std::pair<int, Index>> used;
  for (std::size_t t = 0; t < set.trees.size(); ++t) {
    EXPECT_EQ(set.trees[t].size(), 2u);
    for (const TreeEdge& e : set.trees[t]) EXPECT_TRUE(used.insert({e.i, e.sample}).second);
    if (t > 0) EXPECT_GE(set.trees[t - 1][1].weight, set.trees[t][1].weight);
  }
}

TEST(GreedyMstTest, TiesGoToLowestSampleIndex) {
  const TileSamples tile = make_tile({{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}});
  const TreeSet set = greedy_msts(tile, [](int, int, Index) { return 1.0; }, 3, Connectivity::pairwise);
  ASSERT_EQ(set.trees.size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(set.trees[t][0].sample, static_cast<Index>(t));
}

TEST(BuildSystemTest, NoiselessConstantStackGivesExactRatios) {
  const ExposureStack stack = constant_stack({0.05f, 0.2f, 0.8f});
  BuildConfig config;
  config.k = 10;
  const ReducedSystem sys = build_system(stack, config);
  ASSERT_FALSE(sys.equations.empty());
  for (const PairEquation& e : sys.equations) {
    const double yi = stack.image(e.i).sample(e.pixel, e.channel);
    const double yj = stack.image(e.j).sample(e.pixel, e.channel);
    EXPECT_EQ(e.m, std::log(yi) - std::log(yj));
    EXPECT_NEAR(e.m, std::log(0.25) * (e.j - e.i), 1e-6);
  }
}

TEST(BuildSystemTest, RowCountIsBoundedByTreesPerTile) {
  const ExposureStack stack = constant_stack({0.05f, 0.2f, 0.8f});
  for (Connectivity conn : {Connectivity::greedy, Connectivity::pairwise}) {
    BuildConfig config;
    config.k = 50;
    config.connectivity = conn;
    const ReducedSystem sys = build_system(stack, config);
    const Index tiles = static_cast<Index>(tile_grid(40, 24, 16).size());
    EXPECT_LE(static_cast<Index>(sys.equations.size()), 2 * 50 * tiles);
    // Edge tiles hold 8 x 8 x 3 = 192 samples or more, so every tile yields 50 trees of 2 edges.
    EXPECT_EQ(static_cast<Index>(sys.equations.size()), 2 * 50 * tiles);
    EXPECT_EQ(static_cast<Index>(sys.tiles_used.size()), tiles);
  }
}

TEST(BuildSystemTest, EquationsAreSortedByTile) {
  SimConfig sim;
  sim.exposure_times = {0.125, 1.0, 8.0};
  const SimulatedStack s = simulate_stack(procedural_scene(7, 48, 64), sim, canon_s100_profile().at_iso(200),
                                          Eigen::Vector3d::Zero());
  BuildConfig config;
  config.k = 8;
  const ReducedSystem sys = build_system_unchecked(s.stack, config);
  for (std::size_t k = 1; k < sys.equations.size(); ++k)
    EXPECT_LE(sys.equations[k - 1].tile_id, sys.equations[k].tile_id);
}

TEST(BuildSystemTest, ThreadCountDoesNotChangeResult) {
  SimConfig sim;
  const SimulatedStack s = simulate_stack(procedural_scene(3, 64, 64), sim, canon_s100_profile().at_iso(400),
                                          Eigen::Vector4d::Zero());
  BuildConfig one;
  one.threads = 1;
  BuildConfig many = one;
  many.threads = 4;
  const ReducedSystem a = build_system_unchecked(s.stack, one);
  const ReducedSystem b = build_system_unchecked(s.stack, many);
  ASSERT_EQ(a.equations.size(), b.equations.size());
  for (std::size_t k = 0; k < a.equations.size(); ++k) {
    EXPECT_EQ(a.equations[k].pixel, b.equations[k].pixel);
    EXPECT_EQ(a.equations[k].m, b.equations[k].m);
    EXPECT_EQ(a.equations[k].w, b.equations[k].w);
  }
}

TEST(BuildSystemTest, DisconnectedGraphIsUnsolvable) {
  const ExposureStack stack = constant_stack({0.1f, 0.4f, 1.0f});
  const BuildConfig config;
  EXPECT_THROW(build_system(stack, config), UnsolvableSystem);
  const ReducedSystem sys = build_system_unchecked(stack, config);
  const auto comps = exposure_components(sys);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<Index>{0, 1}));
  EXPECT_EQ(comps[1], (std::vector<Index>{2}));
  EXPECT_EQ(sys.pair_gap_tiles[1], static_cast<Index>(tile_grid(40, 24, 16).size()));
  try {
    require_connected(sys);
    FAIL();
  } catch (const UnsolvableSystem& e) {
    EXPECT_NE(std::string(e.what()).find(" 0 1"), std::string::npos);
  }
}

TEST(BuildSystemTest, CalibratedWeightsNeedNoise) {
  BuildConfig config;
  config.weight_mode = WeightMode::calibrated;
  EXPECT_THROW(config.validate(), DataError);
  config.noise = canon_s100_profile().at_iso(100);
  EXPECT_NO_THROW(config.validate());
  config.k = 0;
  EXPECT_THROW(config.validate(), DomainError);
}

TEST(BuildSystemTest, WeightModesRoundTripThroughText) {
  for (WeightMode m : {WeightMode::uniform, WeightMode::calibration_free, WeightMode::calibrated})
    EXPECT_EQ(parse_weight_mode(to_string(m)), m);
  EXPECT_THROW(parse_weight_mode("optimal"), DataError);
}

}  // namespace
}  // namespace hdrexp
