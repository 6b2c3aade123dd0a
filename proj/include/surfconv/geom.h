#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "surfconv/image.h"

namespace surfconv {

// Pinhole intrinsics. Image coordinates: i runs along columns (right), j runs
// along rows (down). Pixel (row r, col c) sits at continuous (i, j) = (c, r).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws kInvalidArgument unless fx, fy > 0 and width, height >= 1.
  void Validate() const;

  // Unit focal length, principal point at the origin.
  CameraModel normalized() const;

  // Intrinsics for the same view resampled by `scale` in both axes.
  CameraModel Scaled(double scale) const;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct ImagePoint {
  double i = 0.0;
  double j = 0.0;
};

struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
};

// Dense depth in meters. Invalid pixels hold 0 and valid()==0.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height);

  // Any value <= 0 or non-finite marks the pixel invalid.
  static DepthImage FromValues(int width, int height,
                               const std::vector<float>& values);

  int width() const { return depth_.width(); }
  int height() const { return depth_.height(); }

  float depth(int row, int col) const { return depth_.at(row, col); }
  bool valid(int row, int col) const { return valid_.at(row, col) != 0; }

  void Set(int row, int col, float z);
  void Invalidate(int row, int col);

  std::size_t CountValid() const;
  std::vector<float> ValidDepths() const;

  const Image<float>& depth_plane() const { return depth_; }
  const Mask& valid_mask() const { return valid_; }

  bool operator==(const DepthImage&) const = default;

 private:
  Image<float> depth_;
  Mask valid_;
};

struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<Rgb>> color;
  std::optional<std::vector<std::uint8_t>> label;

  std::size_t size() const { return points.size(); }
  // Throws kDimensionMismatch when attribute arrays disagree in length.
  void Validate() const;
};

enum class ReceptiveFieldKind { kImage, kVolume, kSurface };

struct ReceptiveFieldSpec {
  ReceptiveFieldKind kind = ReceptiveFieldKind::kSurface;
  // Pixels for kImage, meters for kVolume and kSurface.
  double radius = 1.0;
};

struct ImageRect {
  ImagePoint center;
  double half_width = 0.0;   // along i
  double half_height = 0.0;  // along j
};

struct Cuboid {
  Point3 center;
  double half_side = 0.0;
};

struct ReceptiveField {
  ReceptiveFieldKind kind = ReceptiveFieldKind::kImage;
  ImageRect rect;  // kImage and kSurface
  Cuboid cuboid;   // kVolume
};

ImagePoint Project(const CameraModel& cam, const Point3& p);
Point3 Backproject(const CameraModel& cam, const ImagePoint& q, double z);

// One point per valid pixel in row-major order.
PointCloud CloudFromDepth(const CameraModel& cam, const DepthImage& depth,
                          const ColorImage* color = nullptr);

ReceptiveField ComputeReceptiveField(const ReceptiveFieldSpec& spec,
                                     const CameraModel& cam,
                                     const Point3& center);

}  // namespace surfconv
