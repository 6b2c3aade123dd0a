#pragma once

#include <array>

#include "surfconv/geom.h"
#include "surfconv/image.h"

namespace surfconv {

using Vec3 = std::array<double, 3>;

struct HhaOptions {
  // Unit gravity direction in camera coordinates. Rows grow downward, so
  // gravity points along +y for a level camera.
  Vec3 gravity{0.0, 1.0, 0.0};
  // Camera height above the ground plane (meters).
  double ground_height = 1.0;
  // Heights mapped linearly onto [0, 1], clamped outside.
  double height_min = 0.0;
  double height_max = 3.0;
};

// Three planes in [0, 1]: disparity, height above ground, angle between the
// surface normal and -gravity. `valid` marks pixels with a usable normal;
// all channels are 0 elsewhere.
struct HhaImage {
  ColorImage channels;
  Mask valid;
};

// Disparity is min-max normalized 1/z over the valid pixels (0 when all
// depths agree). Normals use central differences of backprojected
// neighbors, one-sided at gaps; a pixel lacking a valid neighbor along its
// row or column is marked invalid. Throws kDegenerateDepth when valid depth
// exists but no pixel gets a normal.
HhaImage ComputeHha(const DepthImage& depth, const CameraModel& cam,
                    const HhaOptions& options = {});

struct SurfaceWeightOptions {
  // Divide by max(|cos(normal, view ray)|, min_cosine).
  bool cosine_corrected = false;
  double min_cosine = 0.2;
};

// Frontal-parallel pixel footprint z^2 / (fx * fy); 0 on invalid pixels.
Image<double> SurfaceWeights(const DepthImage& depth, const CameraModel& cam,
                             const SurfaceWeightOptions& options = {});

}  // namespace surfconv
