#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "surfconv/encode.h"
#include "surfconv/error.h"

namespace surfconv {
namespace {

const CameraModel kCam{50, 50, 31.5, 23.5, 64, 48};

DepthImage Constant(float z) {
  return DepthImage::FromValues(kCam.width, kCam.height,
                                std::vector<float>(kCam.width * kCam.height, z));
}

// Plane with unit normal n and offset d (n.p = d), intersected per pixel ray.
DepthImage Plane(double nx, double ny, double nz, double d) {
  DepthImage depth(kCam.width, kCam.height);
  for (int r = 0; r < kCam.height; ++r) {
    for (int c = 0; c < kCam.width; ++c) {
      const double rx = (c - kCam.cx) / kCam.fx, ry = (r - kCam.cy) / kCam.fy;
      const double denom = nx * rx + ny * ry + nz;
      if (denom * d > 0) depth.Set(r, c, static_cast<float>(d / denom));
    }
  }
  return depth;
}

TEST(Hha, FrontoParallelWallIsHalfAngle) {
  const HhaImage hha = ComputeHha(Constant(2.0f), kCam);
  for (int r = 0; r < kCam.height; ++r) {
    for (int c = 0; c < kCam.width; ++c) {
      ASSERT_TRUE(hha.valid.at(r, c));
      EXPECT_NEAR(hha.channels.at(r, c, 2), 0.5f, 1e-6);
      EXPECT_EQ(hha.channels.at(r, c, 0), 0.0f);  // single depth value
    }
  }
}

TEST(Hha, FloorFacingUpIsZeroAngle) {
  HhaOptions opts;
  opts.ground_height = 1.2;
  // Floor 1.2 m below the camera: y = +1.2 with rows growing downward.
  const DepthImage floor = Plane(0, 1, 0, 1.2);
  const HhaImage hha = ComputeHha(floor, kCam, opts);
  std::size_t checked = 0;
  for (int r = 0; r < kCam.height; ++r) {
    for (int c = 0; c < kCam.width; ++c) {
      if (!hha.valid.at(r, c)) continue;
      ++checked;
      EXPECT_NEAR(hha.channels.at(r, c, 2), 0.0f, 2e-3);
      EXPECT_NEAR(hha.channels.at(r, c, 1), 0.0f, 1e-5);
    }
  }
  EXPECT_GT(checked, 500u);
}

TEST(Hha, TiltedPlaneAngle) {
  // Normal 45 degrees between the view axis and up.
  const double k = std::sqrt(0.5);
  const HhaImage hha = ComputeHha(Plane(0, -k, -k, -2.0), kCam);
  for (int r = 2; r < kCam.height - 2; ++r) {
    for (int c = 2; c < kCam.width - 2; ++c) {
      ASSERT_TRUE(hha.valid.at(r, c));
      EXPECT_NEAR(hha.channels.at(r, c, 2), 0.25f, 2e-3);
    }
  }
}

TEST(Hha, DisparityMinMax) {
  DepthImage d = Constant(2.0f);
  d.Set(0, 0, 1.0f);
  d.Set(5, 5, 4.0f);
  const HhaImage hha = ComputeHha(d, kCam);
  EXPECT_EQ(hha.channels.at(0, 0, 0), 1.0f);
  EXPECT_EQ(hha.channels.at(5, 5, 0), 0.0f);
  EXPECT_NEAR(hha.channels.at(9, 9, 0), (0.5 - 0.25) / 0.75, 1e-6);
}

TEST(Hha, HeightAboveGround) {
  HhaOptions opts;
  opts.ground_height = 1.5;
  opts.height_min = 0.0;
  opts.height_max = 3.0;
  const HhaImage hha = ComputeHha(Constant(2.0f), kCam, opts);
  // Row 23.5 is the horizon; row 3 is 20.5 px above it at 2 m.
  const double above = 20.5 * 2.0 / 50.0;
  EXPECT_NEAR(hha.channels.at(3, 10, 1), (1.5 + above) / 3.0, 1e-6);
}

TEST(Hha, GapsAndIsolatedPixels) {
  DepthImage d(kCam.width, kCam.height);
  d.Set(10, 10, 2.0f);  // isolated
  d.Set(20, 20, 2.0f);
  d.Set(20, 21, 2.0f);
  d.Set(21, 20, 2.0f);  // L-shape: one-sided differences
  const HhaImage hha = ComputeHha(d, kCam);
  EXPECT_FALSE(hha.valid.at(10, 10));
  EXPECT_EQ(hha.channels.at(10, 10, 2), 0.0f);
  EXPECT_TRUE(hha.valid.at(20, 20));
  // Each arm of the L lacks a neighbor along one axis.
  EXPECT_FALSE(hha.valid.at(20, 21));
  EXPECT_FALSE(hha.valid.at(21, 20));
  EXPECT_FALSE(hha.valid.at(0, 0));
}

TEST(Hha, DegenerateInputs) {
  DepthImage single(kCam.width, kCam.height);
  single.Set(3, 3, 1.0f);
  try {
    ComputeHha(single, kCam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateDepth);
  }
  const HhaImage empty = ComputeHha(DepthImage(kCam.width, kCam.height), kCam);
  for (float v : empty.channels.data()) EXPECT_EQ(v, 0.0f);
  HhaOptions bad;
  bad.gravity = {0, 2, 0};
  EXPECT_THROW(ComputeHha(Constant(1.0f), kCam, bad), Error);
}

TEST(Hha, RangeAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> z(0.3f, 12.0f), coin(0.0f, 1.0f);
    DepthImage d(kCam.width, kCam.height);
    for (int r = 0; r < kCam.height; ++r) {
      for (int c = 0; c < kCam.width; ++c) {
        if (coin(rng) > 0.2f) d.Set(r, c, z(rng));
      }
    }
    const HhaImage a = ComputeHha(d, kCam);
    const HhaImage b = ComputeHha(d, kCam);
    EXPECT_EQ(a.channels, b.channels);
    EXPECT_EQ(a.valid, b.valid);
    for (int r = 0; r < kCam.height; ++r) {
      for (int c = 0; c < kCam.width; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          const float v = a.channels.at(r, c, ch);
          EXPECT_GE(v, 0.0f);
          EXPECT_LE(v, 1.0f);
          if (!a.valid.at(r, c)) EXPECT_EQ(v, 0.0f);
        }
        if (a.valid.at(r, c)) EXPECT_TRUE(d.valid(r, c));
      }
    }
  }
}

TEST(SurfaceWeights, QuadraticInDepth) {
  DepthImage d(2, 1);
  d.Set(0, 0, 1.0f);
  d.Set(0, 1, 2.0f);
  const Image<double> w = SurfaceWeights(d, kCam);
  EXPECT_DOUBLE_EQ(w.at(0, 1) / w.at(0, 0), 4.0);
}

TEST(SurfaceWeights, AllInvalidIsZero) {
  const Image<double> w = SurfaceWeights(DepthImage(5, 4), kCam);
  for (double v : w.data()) EXPECT_EQ(v, 0.0);
}

TEST(SurfaceWeights, ElementwiseOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> z(0.1f, 30.0f), coin(0.0f, 1.0f);
  const CameraModel cam{412.5, 397.25, 10, 10, 40, 30};
  DepthImage d(40, 30);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 40; ++c) {
      if (coin(rng) > 0.3f) d.Set(r, c, z(rng));
    }
  }
  const Image<double> w = SurfaceWeights(d, cam);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 40; ++c) {
      if (!d.valid(r, c)) {
        EXPECT_EQ(w.at(r, c), 0.0);
        continue;
      }
      const double zz = d.depth(r, c);
      EXPECT_GT(w.at(r, c), 0.0);
      EXPECT_NEAR(w.at(r, c) * cam.fx * cam.fy / (zz * zz), 1.0, 4e-16);
    }
  }
}

TEST(SurfaceWeights, CosineCorrection) {
  SurfaceWeightOptions cosine;
  cosine.cosine_corrected = true;
  // Plane tilted 60 degrees away from the principal ray.
  const double s = std::sin(std::numbers::pi / 3), c = std::cos(std::numbers::pi / 3);
  const DepthImage tilted = Plane(s, 0, c, 1.0);
  const Image<double> plain = SurfaceWeights(tilted, kCam);
  const Image<double> corrected = SurfaceWeights(tilted, kCam, cosine);
  const int r = 23, col = 31;
  const double rx = (col - kCam.cx) / kCam.fx, ry = (r - kCam.cy) / kCam.fy;
  const double len = std::sqrt(rx * rx + ry * ry + 1);
  const double expect_cos = std::abs(s * rx + c) / len;
  EXPECT_NEAR(corrected.at(r, col) / plain.at(r, col), 1.0 / expect_cos, 1e-3);

  // Grazing planes clamp at 1 / min_cosine.
  const DepthImage grazing = Plane(0.999, 0, std::sqrt(1 - 0.998001), 1.0);
  const Image<double> gp = SurfaceWeights(grazing, kCam);
  const Image<double> gc = SurfaceWeights(grazing, kCam, cosine);
  for (int rr = 1; rr < kCam.height - 1; ++rr) {
    for (int cc = 1; cc < kCam.width - 1; ++cc) {
      if (!grazing.valid(rr, cc)) continue;
      EXPECT_LE(gc.at(rr, cc) / gp.at(rr, cc), 5.0 + 1e-9);
    }
  }
}

}  // namespace
}  // namespace surfconv
