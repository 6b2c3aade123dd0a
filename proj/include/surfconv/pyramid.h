#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "surfconv/d4.h"
#include "surfconv/geom.h"
#include "surfconv/image.h"

namespace surfconv {

// Owner value for full-resolution pixels without valid depth.
inline constexpr std::uint8_t kNoLevel = 255;

struct PyramidLevel {
  std::size_t level_index = 0;
  double scale = 1.0;
  ColorImage image;  // C x round(H*s) x round(W*s)
  Mask valid;
  std::optional<LabelMap> labels;

  bool operator==(const PyramidLevel&) const = default;
};

// Depth-masked, proportionally rescaled copies of one RGBD frame. Every valid
// full-resolution pixel is owned by exactly one level.
struct Pyramid {
  std::vector<PyramidLevel> levels;
  LevelPartition partition;
  int source_width = 0;
  int source_height = 0;
  // Level index per full-resolution pixel, kNoLevel where depth is invalid.
  Image<std::uint8_t> owner;

  bool operator==(const Pyramid&) const = default;
};

struct PyramidOptions {
  // Keep out-of-level color as context; masks and labels stay level-only.
  bool keep_context = false;
  int threads = 1;
};

// s_n = z_n / z_N, so the farthest level keeps native resolution.
std::vector<double> LevelScales(const LevelPartition& part);

// Level dimension for a source dimension: max(1, round(extent * scale)).
int ScaledExtent(int extent, double scale);

// Level cell (r', c') covers the full-resolution area of continuous
// coordinates [(r' - 1/2)/s, (r' + 1/2)/s) where pixel r spans
// [r - 1/2, r + 1/2). Colors are area-averaged over in-level pixels, a cell is
// valid when at least half its covered area belongs to the level, and labels
// take the area-weighted majority of in-level labels.
Pyramid BuildPyramid(const ColorImage& image, const DepthImage& depth,
                     const LabelMap* labels, const LevelPartition& part,
                     const PyramidOptions& options = {});

// Full-resolution label map. Each owned pixel reads its level's prediction at
// (round(r*s), round(c*s)), clamped; unowned pixels get kIgnoreLabel.
LabelMap Reassemble(const Pyramid& pyramid,
                    std::span<const LabelMap> predictions);

}  // namespace surfconv
