#pragma once

#include <array>
#include <string>
#include <vector>

#include "surfconv/geom.h"

namespace surfconv {

struct DepthSample {
  int row = 0;
  int col = 0;
  double depth = 0.0;
};

// Sparse depth on a pixel grid; at most one sample per pixel.
class SparseDepth {
 public:
  SparseDepth(int width, int height);

  // Throws kInvalidArgument for out-of-bounds pixels, kNonPositiveDepth for
  // depth <= 0. A second sample on an occupied pixel keeps the nearer depth.
  void Add(int row, int col, double depth);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<DepthSample>& samples() const { return samples_; }

 private:
  int width_;
  int height_;
  std::vector<DepthSample> samples_;
  std::vector<int> slot_;  // pixel -> sample index + 1, 0 when empty
};

struct MeshVertex {
  double i = 0.0;  // column
  double j = 0.0;  // row
  double depth = 0.0;
};

struct TriangleMesh {
  std::vector<MeshVertex> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct DensifyOptions {
  double max_edge = 20.0;       // pixels
  double max_depth_gap = 1.0;   // meters
  int threads = 1;
};

// Delaunay triangulation of the sample pixel positions. Triangles with an
// edge longer than max_edge or a vertex depth gap above max_depth_gap are
// dropped, as are zero-area triangles from collinear/cocircular input.
TriangleMesh Triangulate(const SparseDepth& sparse,
                         const DensifyOptions& options = {});

// Barycentric depth per covered pixel center; overlaps keep the nearest
// depth. Uncovered pixels are invalid.
DepthImage Rasterize(const TriangleMesh& mesh, int width, int height,
                     int threads = 1);

// "row col depth" per line; blank lines and '#' comments are skipped.
SparseDepth ReadSparseText(const std::string& path, int width, int height);

// Projects points into the camera, rounding to the nearest pixel. Points
// behind the camera or outside the image are skipped.
SparseDepth SparseFromCloud(const PointCloud& cloud, const CameraModel& cam);

}  // namespace surfconv
