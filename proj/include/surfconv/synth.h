#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surfconv/geom.h"
#include "surfconv/image.h"

namespace surfconv {

enum class TextureKind { kConstant, kChecker, kStripes, kSine };

// Color as a function of surface coordinates (u, v) in meters.
struct Texture {
  TextureKind kind = TextureKind::kConstant;
  double period = 1.0;  // checker cell / stripe width / sine period
  Rgb base{0.5f, 0.5f, 0.5f};
  Rgb alt{0.5f, 0.5f, 0.5f};

  Rgb Sample(double u, double v) const;
};

enum class SurfaceKind {
  kRect,   // fronto-parallel rectangle [x0, x1) x [y0, y1) at depth z
  kWall,   // fronto-parallel plane at depth z
  kFloor,  // horizontal plane y = height (rows grow downward)
};

struct SceneObject {
  SurfaceKind kind = SurfaceKind::kRect;
  std::uint8_t class_id = 0;
  double z = 1.0;
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double height = 1.0;
  Texture texture;
};

struct SyntheticScene {
  CameraModel camera;
  std::vector<SceneObject> objects;
  // Color samples per pixel along each axis; depth and labels use the
  // pixel center.
  int supersample = 1;
};

struct RenderedScene {
  ColorImage rgb;
  DepthImage depth;
  LabelMap labels;  // kIgnoreLabel where no surface is hit
};

// Ray casts every pixel center; the nearest surface wins.
RenderedScene Render(const SyntheticScene& scene);

// Line-oriented scene description:
//   camera fx fy cx cy width height
//   supersample n
//   rect  class z x0 y0 x1 y1 <texture>
//   wall  class z <texture>
//   floor class height <texture>
// where <texture> is "kind period r g b r2 g2 b2", kind one of constant,
// checker, stripes, sine.
SyntheticScene ParseScene(const std::string& text);
std::string SceneToText(const SyntheticScene& scene);

// Scenes used by the multi-level vs single-level comparison: textured
// fronto-parallel rectangles of fixed physical size at depths drawn
// uniformly from [min_depth, max_depth]. Class 0 carries a smooth sine
// texture, classes 1 and 2 checkers that differ only in physical cell size.
// With wall_depth > 0 a class-0 wall closes the background; otherwise
// background pixels have no depth and the ignore label.
struct RandomSceneOptions {
  int width = 64;
  int height = 64;
  double focal = 48.0;
  double min_depth = 1.0;
  double max_depth = 8.0;
  double wall_depth = 0.0;
  int min_objects = 3;
  int max_objects = 6;
  double smooth_period = 4.0;     // meters, class 0
  double fine_cell = 1.0 / 3.0;   // meters, class 1
  double coarse_cell = 1.0;       // meters, class 2
  double min_side = 1.0;          // meters
  double max_side = 2.0;
  int supersample = 3;
};

SyntheticScene RandomScene(const RandomSceneOptions& options,
                           std::uint64_t seed);

}  // namespace surfconv
