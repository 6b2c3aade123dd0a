#include "surfconv/geom.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace surfconv {

namespace {

void RequirePositiveDepth(double z) {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth,
                "depth must be positive, got " + std::to_string(z));
  }
}

}  // namespace

void CameraModel::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid camera intrinsics");
  }
}

CameraModel CameraModel::normalized() const {
  CameraModel cam = *this;
  cam.fx = 1.0;
  cam.fy = 1.0;
  cam.cx = 0.0;
  cam.cy = 0.0;
  return cam;
}

CameraModel CameraModel::Scaled(double scale) const {
  CameraModel cam = *this;
  cam.fx *= scale;
  cam.fy *= scale;
  cam.cx *= scale;
  cam.cy *= scale;
  cam.width = std::max(1, static_cast<int>(std::lround(width * scale)));
  cam.height = std::max(1, static_cast<int>(std::lround(height * scale)));
  return cam;
}

DepthImage::DepthImage(int width, int height)
    : depth_(width, height, 1, 0.0f), valid_(width, height, 1, 0) {}

DepthImage DepthImage::FromValues(int width, int height,
                                  const std::vector<float>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "depth value count does not match dimensions");
  }
  DepthImage d(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      d.Set(r, c, values[static_cast<std::size_t>(r) * width + c]);
    }
  }
  return d;
}

void DepthImage::Set(int row, int col, float z) {
  if (std::isfinite(z) && z > 0.0f) {
    depth_.at(row, col) = z;
    valid_.at(row, col) = 1;
  } else {
    Invalidate(row, col);
  }
}

void DepthImage::Invalidate(int row, int col) {
  depth_.at(row, col) = 0.0f;
  valid_.at(row, col) = 0;
}

std::size_t DepthImage::CountValid() const {
  std::size_t n = 0;
  for (auto v : valid_.data()) n += v != 0;
  return n;
}

std::vector<float> DepthImage::ValidDepths() const {
  std::vector<float> out;
  out.reserve(CountValid());
  for (std::size_t k = 0; k < valid_.data().size(); ++k) {
    if (valid_.data()[k]) out.push_back(depth_.data()[k]);
  }
  return out;
}

void PointCloud::Validate() const {
  if ((color && color->size() != points.size()) ||
      (label && label->size() != points.size())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point cloud attribute arrays differ in length");
  }
}

ImagePoint Project(const CameraModel& cam, const Point3& p) {
  RequirePositiveDepth(p.z);
  return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy};
}

Point3 Backproject(const CameraModel& cam, const ImagePoint& q, double z) {
  RequirePositiveDepth(z);
  return {(q.i - cam.cx) * z / cam.fx, (q.j - cam.cy) * z / cam.fy, z};
}

PointCloud CloudFromDepth(const CameraModel& cam, const DepthImage& depth,
                          const ColorImage* color) {
  if (color && (!color->SameSize(depth.width(), depth.height()) ||
                color->channels() != 3)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "color image does not match depth dimensions");
  }
  PointCloud cloud;
  cloud.points.reserve(depth.CountValid());
  if (color) cloud.color.emplace();
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      if (!depth.valid(r, c)) continue;
      cloud.points.push_back(Backproject(
          cam, {static_cast<double>(c), static_cast<double>(r)},
          depth.depth(r, c)));
      if (color) {
        cloud.color->push_back(
            {color->at(r, c, 0), color->at(r, c, 1), color->at(r, c, 2)});
      }
    }
  }
  return cloud;
}

ReceptiveField ComputeReceptiveField(const ReceptiveFieldSpec& spec,
                                     const CameraModel& cam,
                                     const Point3& center) {
  RequirePositiveDepth(center.z);
  if (!(spec.radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "receptive field radius must be positive");
  }
  ReceptiveField rf;
  rf.kind = spec.kind;
  switch (spec.kind) {
    case ReceptiveFieldKind::kImage:
      rf.rect = {Project(cam, center), spec.radius, spec.radius};
      break;
    case ReceptiveFieldKind::kVolume:
      rf.cuboid = {center, spec.radius};
      break;
    case ReceptiveFieldKind::kSurface:
      // Neighbors share the center depth, so a metric radius shrinks as 1/z.
      rf.rect = {Project(cam, center), cam.fx * spec.radius / center.z,
                 cam.fy * spec.radius / center.z};
      break;
  }
  return rf;
}

}  // namespace surfconv
