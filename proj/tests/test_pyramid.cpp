#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "scenes.h"
#include "surfconv/error.h"
#include "surfconv/io.h"
#include "surfconv/pyramid.h"

namespace surfconv {
namespace {

LevelPartition MakePartition(std::vector<double> boundaries,
                             std::vector<double> reps) {
  LevelPartition part;
  part.boundaries = std::move(boundaries);
  part.rep_depths = std::move(reps);
  return part;
}

ColorImage RandomImage(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ColorImage img(w, h, channels);
  for (float& v : img.data()) v = u(rng);
  return img;
}

DepthImage RandomDepth(int w, int h, std::uint64_t seed, double hole_rate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 9.0), coin(0.0, 1.0);
  DepthImage d(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (coin(rng) >= hole_rate) d.Set(r, c, static_cast<float>(u(rng)));
    }
  }
  return d;
}

TEST(LevelScales, Examples) {
  EXPECT_EQ(LevelScales(MakePartition({0.5, 1.5, 3, 5}, {1, 2, 4})),
            (std::vector<double>{0.25, 0.5, 1.0}));
  EXPECT_EQ(LevelScales(MakePartition({1, 9}, {3})), std::vector<double>{1.0});
  const double eps = 1e-9;
  const auto near_degenerate =
      LevelScales(MakePartition({1.9, 2 + eps / 2, 3}, {2, 2 + eps}));
  EXPECT_NEAR(near_degenerate[0], 1.0, 1e-9);
  EXPECT_EQ(near_degenerate[1], 1.0);
}

TEST(LevelScales, MonotoneEndingAtOne) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.2, 20);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> depths(500);
    for (double& z : depths) z = u(rng);
    const auto scales = LevelScales(FitPartition(depths, 1.0, 1 + trial % 6));
    EXPECT_EQ(scales.back(), 1.0);
    for (std::size_t n = 1; n < scales.size(); ++n) {
      EXPECT_LE(scales[n - 1], scales[n]);
    }
  }
}

TEST(ScaledExtent, RoundsAndFloorsAtOne) {
  EXPECT_EQ(ScaledExtent(640, 0.5), 320);
  EXPECT_EQ(ScaledExtent(5, 0.5), 3);
  EXPECT_EQ(ScaledExtent(10, 0.01), 1);
}

TEST(BuildPyramid, SingleLevelIsIdentity) {
  const ColorImage img = RandomImage(13, 7, 3, 1);
  const DepthImage depth = RandomDepth(13, 7, 2, 0.0);
  LabelMap labels(13, 7);
  for (std::size_t k = 0; k < labels.data().size(); ++k) labels.data()[k] = k % 3;
  const auto part = FitPartition(depth.ValidDepths(), 1.0, 1);
  const Pyramid pyr = BuildPyramid(img, depth, &labels, part);
  ASSERT_EQ(pyr.levels.size(), 1u);
  EXPECT_EQ(pyr.levels[0].scale, 1.0);
  EXPECT_EQ(pyr.levels[0].image, img);
  EXPECT_EQ(pyr.levels[0].valid, Mask(13, 7, 1, 1));
  EXPECT_EQ(*pyr.levels[0].labels, labels);
}

TEST(BuildPyramid, TwoPlaneMembership) {
  const int w = 40, h = 20;
  const DepthImage depth = testing::SplitDepth(w, h, 1.0f, 2.0f);
  const auto part = FitPartition(depth.ValidDepths(), 0.0, 2);
  const Pyramid pyr = BuildPyramid(RandomImage(w, h, 3, 5), depth, nullptr, part);
  ASSERT_EQ(pyr.levels.size(), 2u);
  EXPECT_EQ(pyr.levels[0].scale, 0.5);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      EXPECT_EQ(pyr.owner.at(r, c), c < w / 2 ? 0 : 1);
    }
  }
  // Level 0 at half scale: 20 x 10 cells, cells whose span is mostly left.
  const Mask& near = pyr.levels[0].valid;
  ASSERT_EQ(near.width(), 20);
  ASSERT_EQ(near.height(), 10);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 20; ++c) EXPECT_EQ(near.at(r, c), c < 10 ? 1 : 0);
  }
  const Mask& far = pyr.levels[1].valid;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) EXPECT_EQ(far.at(r, c), c >= w / 2 ? 1 : 0);
  }
}

TEST(BuildPyramid, PartitionOfUnity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DepthImage depth = RandomDepth(31, 23, seed, 0.2);
    const auto part = FitPartition(depth.ValidDepths(), 1.0, 1 + seed % 5);
    const Pyramid pyr =
        BuildPyramid(RandomImage(31, 23, 1, seed), depth, nullptr, part);
    std::vector<std::size_t> owned(part.n_levels(), 0);
    std::size_t unowned = 0;
    for (int r = 0; r < 23; ++r) {
      for (int c = 0; c < 31; ++c) {
        const std::uint8_t o = pyr.owner.at(r, c);
        if (o == kNoLevel) {
          EXPECT_FALSE(depth.valid(r, c));
          ++unowned;
          continue;
        }
        ASSERT_LT(o, part.n_levels());
        const double z = depth.depth(r, c);
        EXPECT_TRUE(o == 0 || z >= part.boundaries[o]);
        EXPECT_TRUE(o + 1u == part.n_levels() || z < part.boundaries[o + 1]);
        ++owned[o];
      }
    }
    std::size_t total = 0;
    for (std::size_t n : owned) total += n;
    EXPECT_EQ(total, depth.CountValid());
    EXPECT_EQ(total + unowned, 31u * 23u);
  }
}

TEST(BuildPyramid, LevelShapesAndMasking) {
  const DepthImage depth = RandomDepth(50, 30, 9, 0.1);
  const auto part = FitPartition(depth.ValidDepths(), 1.0, 3);
  LabelMap labels(50, 30, 1, 1);
  const Pyramid pyr =
      BuildPyramid(RandomImage(50, 30, 3, 9), depth, &labels, part);
  const auto scales = LevelScales(part);
  for (std::size_t n = 0; n < 3; ++n) {
    const PyramidLevel& lvl = pyr.levels[n];
    EXPECT_EQ(lvl.level_index, n);
    EXPECT_EQ(lvl.scale, scales[n]);
    EXPECT_EQ(lvl.image.width(), ScaledExtent(50, scales[n]));
    EXPECT_EQ(lvl.image.height(), ScaledExtent(30, scales[n]));
    for (int r = 0; r < lvl.valid.height(); ++r) {
      for (int c = 0; c < lvl.valid.width(); ++c) {
        if (lvl.valid.at(r, c)) {
          EXPECT_EQ(lvl.labels->at(r, c), 1);
        } else {
          EXPECT_EQ(lvl.labels->at(r, c), kIgnoreLabel);
          for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(lvl.image.at(r, c, ch), 0.0f);
        }
      }
    }
  }
}

TEST(BuildPyramid, AreaAverageOfConstantIsConstant) {
  const DepthImage depth = testing::SplitDepth(37, 17, 1.0f, 3.0f);
  const auto part = FitPartition(depth.ValidDepths(), 0.0, 2);
  const Pyramid pyr = BuildPyramid(ColorImage(37, 17, 2, 0.625f), depth,
                                   nullptr, part);
  for (const PyramidLevel& lvl : pyr.levels) {
    for (int r = 0; r < lvl.valid.height(); ++r) {
      for (int c = 0; c < lvl.valid.width(); ++c) {
        if (!lvl.valid.at(r, c)) continue;
        EXPECT_NEAR(lvl.image.at(r, c, 1), 0.625f, 1e-6);
      }
    }
  }
}

TEST(BuildPyramid, MajorityVoteTieTakesSmallerLabel) {
  // One level at scale 0.5 over a 2x2 block split evenly between labels.
  const DepthImage depth = DepthImage::FromValues(4, 1, {1, 1, 1, 2});
  LabelMap labels(4, 1);
  labels.data() = {0, 4, 3, 1};
  const auto part = MakePartition({1, 1.5, 2}, {1, 2});
  const Pyramid pyr = BuildPyramid(ColorImage(4, 1, 1), depth, &labels, part);
  // Cell 1 spans pixel 1 (half), 2 (full), 3 (half, other level).
  // Labels: 4 with weight 0.5, 3 with weight 1 -> 3.
  EXPECT_EQ(pyr.levels[0].labels->at(0, 1), 3);
  // Cell 0 spans pixel 0 (full) and 1 (half): label 0 wins.
  EXPECT_EQ(pyr.levels[0].labels->at(0, 0), 0);

  LabelMap tie(2, 1);
  tie.data() = {7, 5};
  const DepthImage flat = DepthImage::FromValues(2, 1, {1, 1});
  const auto wide = MakePartition({0.5, 1.5, 4}, {1, 4});
  const Pyramid p2 = BuildPyramid(ColorImage(2, 1, 1), flat, &tie, wide);
  // Scale 0.25 makes one cell covering both pixels equally.
  EXPECT_EQ(p2.levels[0].labels->at(0, 0), 5);
}

TEST(BuildPyramid, KeepContextKeepsMasksAndLabels) {
  const DepthImage depth = RandomDepth(24, 18, 3, 0.1);
  const ColorImage img = RandomImage(24, 18, 3, 3);
  LabelMap labels(24, 18, 1, 2);
  const auto part = FitPartition(depth.ValidDepths(), 1.0, 3);
  const Pyramid masked = BuildPyramid(img, depth, &labels, part);
  PyramidOptions opts;
  opts.keep_context = true;
  const Pyramid context = BuildPyramid(img, depth, &labels, part, opts);
  bool any_context = false;
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(masked.levels[n].valid, context.levels[n].valid);
    EXPECT_EQ(masked.levels[n].labels, context.levels[n].labels);
    const auto& m = masked.levels[n];
    for (int r = 0; r < m.valid.height(); ++r) {
      for (int c = 0; c < m.valid.width(); ++c) {
        if (!m.valid.at(r, c) && context.levels[n].image.at(r, c, 0) != 0.0f) {
          any_context = true;
        }
      }
    }
  }
  EXPECT_TRUE(any_context);
}

TEST(BuildPyramid, ThreadCountDoesNotChangeOutput) {
  const DepthImage depth = RandomDepth(40, 30, 12, 0.05);
  const ColorImage img = RandomImage(40, 30, 3, 12);
  const auto part = FitPartition(depth.ValidDepths(), 2.0, 4);
  PyramidOptions one, four;
  four.threads = 4;
  EXPECT_EQ(BuildPyramid(img, depth, nullptr, part, one),
            BuildPyramid(img, depth, nullptr, part, four));
}

TEST(BuildPyramid, DimensionMismatch) {
  const DepthImage depth = RandomDepth(8, 8, 1, 0.0);
  const auto part = FitPartition(depth.ValidDepths(), 1.0, 2);
  try {
    BuildPyramid(ColorImage(8, 7, 3), depth, nullptr, part);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  LabelMap labels(7, 8);
  EXPECT_THROW(BuildPyramid(ColorImage(8, 8, 3), depth, &labels, part), Error);
}

// Crop of a level image restricted to its mask's bounding box.
struct Crop {
  int top = 0, left = 0, height = 0, width = 0;
};

Crop MaskBox(const Mask& m) {
  int top = m.height(), left = m.width(), bottom = -1, right = -1;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) continue;
      top = std::min(top, r);
      bottom = std::max(bottom, r);
      left = std::min(left, c);
      right = std::max(right, c);
    }
  }
  return {top, left, bottom - top + 1, right - left + 1};
}

TEST(BuildPyramid, SquareAtTwoDepthsMatches) {
  const RenderedScene scene =
      Render(testing::TwoSquareScene(testing::SmoothTexture()));
  const auto part = FitPartition(scene.depth.ValidDepths(), 2.0, 2);
  ASSERT_EQ(part.rep_depths, (std::vector<double>{2.0, 4.0}));
  const Pyramid pyr = BuildPyramid(scene.rgb, scene.depth, nullptr, part);
  const Crop a = MaskBox(pyr.levels[0].valid);
  const Crop b = MaskBox(pyr.levels[1].valid);
  EXPECT_EQ(a.width, 32);
  EXPECT_EQ(a.height, 32);
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(a.height, b.height);
  double diff = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < a.height; ++r) {
      for (int c = 0; c < a.width; ++c) {
        diff += std::abs(pyr.levels[0].image.at(a.top + r, a.left + c, ch) -
                         pyr.levels[1].image.at(b.top + r, b.left + c, ch));
      }
    }
  }
  diff /= 3.0 * a.height * a.width;
  EXPECT_LE(diff, 0.05 * 0.8);  // texture range is 0.8 wide
}

TEST(Reassemble, SingleLevelConstant) {
  const DepthImage depth = RandomDepth(10, 6, 4, 0.3);
  const auto part = FitPartition(depth.ValidDepths(), 1.0, 1);
  const Pyramid pyr = BuildPyramid(ColorImage(10, 6, 3), depth, nullptr, part);
  const std::vector<LabelMap> preds{LabelMap(10, 6, 1, 3)};
  const LabelMap full = Reassemble(pyr, preds);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 10; ++c) {
      EXPECT_EQ(full.at(r, c), depth.valid(r, c) ? 3 : kIgnoreLabel);
    }
  }
}

TEST(Reassemble, TwoLevelConstants) {
  const DepthImage depth = testing::SplitDepth(30, 10, 1.0f, 4.0f);
  const auto part = FitPartition(depth.ValidDepths(), 0.0, 2);
  const Pyramid pyr = BuildPyramid(ColorImage(30, 10, 3), depth, nullptr, part);
  std::vector<LabelMap> preds;
  preds.emplace_back(pyr.levels[0].valid.width(), pyr.levels[0].valid.height(), 1, 6);
  preds.emplace_back(pyr.levels[1].valid.width(), pyr.levels[1].valid.height(), 1, 9);
  const LabelMap full = Reassemble(pyr, preds);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 30; ++c) EXPECT_EQ(full.at(r, c), c < 15 ? 6 : 9);
  }
}

// A pixel reads cell round(r*s); its own footprint always overlaps that cell,
// so when the cell is valid and every in-level pixel overlapping it carries
// one label, that label comes back exactly. Any mismatch must sit on an
// invalid or mixed cell.
TEST(Reassemble, RecoversLabelsOfPureCells) {
  RandomSceneOptions opts;
  opts.width = 96;
  opts.height = 72;
  opts.supersample = 1;
  for (double wall : {0.0, 9.0}) {
    opts.wall_depth = wall;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const RenderedScene scene = Render(RandomScene(opts, seed));
      auto depths = scene.depth.ValidDepths();
      std::sort(depths.begin(), depths.end());
      const auto distinct = static_cast<std::size_t>(
          std::unique(depths.begin(), depths.end()) - depths.begin());
      const auto part =
          FitPartition(scene.depth.ValidDepths(), 1.0, std::min<std::size_t>(3, distinct));
      const Pyramid pyr = BuildPyramid(scene.rgb, scene.depth, &scene.labels, part);
      std::vector<LabelMap> preds;
      for (const PyramidLevel& lvl : pyr.levels) preds.push_back(*lvl.labels);
      const LabelMap full = Reassemble(pyr, preds);

      // Full-resolution pixels whose footprint overlaps a cell, per axis.
      auto span = [](int cell, double s, int extent) {
        const double lo = (cell - 0.5) / s, hi = (cell + 0.5) / s;
        int first = extent, last = -1;
        for (int y = 0; y < extent; ++y) {
          if (y + 0.5 > lo && y - 0.5 < hi) first = std::min(first, y), last = y;
        }
        return std::pair{first, last};
      };
      std::size_t pure = 0;
      for (int r = 0; r < opts.height; ++r) {
        for (int c = 0; c < opts.width; ++c) {
          const std::uint8_t gt = scene.labels.at(r, c);
          if (gt == kIgnoreLabel) continue;
          const int n = pyr.owner.at(r, c);
          const PyramidLevel& lvl = pyr.levels[n];
          const int rr_raw = static_cast<int>(std::lround(r * lvl.scale));
          const int cc_raw = static_cast<int>(std::lround(c * lvl.scale));
          const int rr = std::min(lvl.valid.height() - 1, rr_raw);
          const int cc = std::min(lvl.valid.width() - 1, cc_raw);
          const auto [r0, r1] = span(rr, lvl.scale, opts.height);
          const auto [c0, c1] = span(cc, lvl.scale, opts.width);
          // Only pixels clamped onto the last cell can miss its footprint.
          const bool inside = r0 <= r && r <= r1 && c0 <= c && c <= c1;
          ASSERT_TRUE(inside || rr != rr_raw || cc != cc_raw) << r << "," << c;
          bool mixed = false;
          for (int y = r0; y <= r1; ++y) {
            for (int x = c0; x <= c1; ++x) {
              if (pyr.owner.at(y, x) == n && scene.labels.at(y, x) != gt) mixed = true;
            }
          }
          const bool is_pure = inside && lvl.valid.at(rr, cc) && !mixed;
          pure += is_pure;
          if (full.at(r, c) != gt) {
            EXPECT_FALSE(is_pure) << "seed " << seed << " pixel " << r << "," << c;
          }
        }
      }
      EXPECT_GT(pure, 0u);
    }
  }
}

TEST(Reassemble, DimensionMismatch) {
  const DepthImage depth = testing::SplitDepth(8, 8, 1.0f, 2.0f);
  const auto part = FitPartition(depth.ValidDepths(), 0.0, 2);
  const Pyramid pyr = BuildPyramid(ColorImage(8, 8, 3), depth, nullptr, part);
  const std::vector<LabelMap> one{LabelMap(8, 8)};
  EXPECT_THROW(Reassemble(pyr, one), Error);
  const std::vector<LabelMap> wrong{LabelMap(3, 3), LabelMap(8, 8)};
  EXPECT_THROW(Reassemble(pyr, wrong), Error);
}

TEST(PyramidDump, RoundTripBitExact) {
  const DepthImage depth = RandomDepth(33, 21, 21, 0.1);
  LabelMap labels(33, 21);
  std::mt19937_64 rng(21);
  for (auto& l : labels.data()) l = static_cast<std::uint8_t>(rng() % 4);
  const auto part = FitPartition(depth.ValidDepths(), 0.5, 3);
  for (int channels : {1, 3, 6}) {
    const Pyramid pyr =
        BuildPyramid(RandomImage(33, 21, channels, 21), depth, &labels, part);
    const auto dir = std::filesystem::temp_directory_path() /
                     ("surfconv_pyr_" + std::to_string(channels));
    std::filesystem::remove_all(dir);
    DumpPyramid(dir.string(), pyr);
    EXPECT_EQ(LoadPyramid(dir.string()), pyr);
    std::filesystem::remove_all(dir);
  }
}

}  // namespace
}  // namespace surfconv
