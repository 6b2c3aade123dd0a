#include "surfconv/encode.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "surfconv/error.h"

namespace surfconv {

namespace {

Vec3 Sub(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

Vec3 Cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double Dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double Norm(const Vec3& a) { return std::sqrt(Dot(a, a)); }

Point3 PointAt(const DepthImage& depth, const CameraModel& cam, int r, int c) {
  return Backproject(cam, {static_cast<double>(c), static_cast<double>(r)},
                     depth.depth(r, c));
}

// Difference of backprojected neighbors along one axis, central when both
// neighbors are valid, one-sided otherwise.
std::optional<Vec3> Tangent(const DepthImage& depth, const CameraModel& cam,
                            int r, int c, int dr, int dc) {
  auto valid = [&](int rr, int cc) {
    return rr >= 0 && rr < depth.height() && cc >= 0 && cc < depth.width() &&
           depth.valid(rr, cc);
  };
  const bool fwd = valid(r + dr, c + dc);
  const bool bwd = valid(r - dr, c - dc);
  if (!fwd && !bwd) return std::nullopt;
  const Point3 hi = fwd ? PointAt(depth, cam, r + dr, c + dc)
                        : PointAt(depth, cam, r, c);
  const Point3 lo = bwd ? PointAt(depth, cam, r - dr, c - dc)
                        : PointAt(depth, cam, r, c);
  return Sub(hi, lo);
}

// Unit normal facing the camera, or nullopt when undefined.
std::optional<Vec3> Normal(const DepthImage& depth, const CameraModel& cam,
                           int r, int c) {
  const auto du = Tangent(depth, cam, r, c, 0, 1);
  const auto dv = Tangent(depth, cam, r, c, 1, 0);
  if (!du || !dv) return std::nullopt;
  Vec3 n = Cross(*du, *dv);
  const double len = Norm(n);
  if (!(len > 0.0)) return std::nullopt;
  for (double& v : n) v /= len;
  const Point3 p = PointAt(depth, cam, r, c);
  if (Dot(n, {p.x, p.y, p.z}) > 0.0) {
    for (double& v : n) v = -v;
  }
  return n;
}

}  // namespace

HhaImage ComputeHha(const DepthImage& depth, const CameraModel& cam,
                    const HhaOptions& options) {
  cam.Validate();
  const double g_len = Norm(options.gravity);
  if (std::abs(g_len - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "gravity must be a unit vector");
  }
  if (!(options.height_max > options.height_min)) {
    throw Error(ErrorCode::kInvalidArgument, "empty height range");
  }
  const Vec3 up{-options.gravity[0], -options.gravity[1], -options.gravity[2]};
  const int width = depth.width();
  const int height = depth.height();
  HhaImage out{ColorImage(width, height, 3, 0.0f), Mask(width, height, 1, 0)};

  double inv_min = std::numeric_limits<double>::infinity();
  double inv_max = -std::numeric_limits<double>::infinity();
  for (float z : depth.ValidDepths()) {
    inv_min = std::min(inv_min, 1.0 / z);
    inv_max = std::max(inv_max, 1.0 / z);
  }
  const double inv_range = inv_max - inv_min;
  std::size_t with_normal = 0;

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (!depth.valid(r, c)) continue;
      const auto normal = Normal(depth, cam, r, c);
      if (!normal) continue;
      const double z = depth.depth(r, c);
      const Point3 p = PointAt(depth, cam, r, c);
      const double disparity =
          inv_range > 0.0 ? (1.0 / z - inv_min) / inv_range : 0.0;
      const double h = Dot({p.x, p.y, p.z}, up) + options.ground_height;
      const double height_n = (h - options.height_min) /
                              (options.height_max - options.height_min);
      const double cos_up = std::clamp(Dot(*normal, up), -1.0, 1.0);
      const double angle = std::acos(cos_up) / std::numbers::pi;
      out.valid.at(r, c) = 1;
      out.channels.at(r, c, 0) = static_cast<float>(std::clamp(disparity, 0.0, 1.0));
      out.channels.at(r, c, 1) = static_cast<float>(std::clamp(height_n, 0.0, 1.0));
      out.channels.at(r, c, 2) = static_cast<float>(std::clamp(angle, 0.0, 1.0));
      ++with_normal;
    }
  }
  if (with_normal == 0 && depth.CountValid() > 0) {
    throw Error(ErrorCode::kDegenerateDepth,
                "no pixel has valid neighbors along both axes");
  }
  return out;
}

Image<double> SurfaceWeights(const DepthImage& depth, const CameraModel& cam,
                             const SurfaceWeightOptions& options) {
  cam.Validate();
  Image<double> weights(depth.width(), depth.height(), 1, 0.0);
  const double inv_focal = 1.0 / (cam.fx * cam.fy);
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      if (!depth.valid(r, c)) continue;
      const double z = depth.depth(r, c);
      double w = z * z * inv_focal;
      if (options.cosine_corrected) {
        if (const auto n = Normal(depth, cam, r, c)) {
          const Point3 p = PointAt(depth, cam, r, c);
          const Vec3 ray{p.x, p.y, p.z};
          const double cosine = std::abs(Dot(*n, ray)) / Norm(ray);
          w /= std::max(cosine, options.min_cosine);
        }
      }
      weights.at(r, c) = w;
    }
  }
  return weights;
}

}  // namespace surfconv
