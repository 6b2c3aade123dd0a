#include "surfconv/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "surfconv/error.h"

namespace surfconv {

namespace {

Rgb Mix(const Rgb& a, const Rgb& b, double t) {
  return {static_cast<float>(a.r + (b.r - a.r) * t),
          static_cast<float>(a.g + (b.g - a.g) * t),
          static_cast<float>(a.b + (b.b - a.b) * t)};
}

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  const SceneObject* object = nullptr;
  double u = 0.0, v = 0.0;
};

// Ray (dx, dy, 1) scaled by t; returns the nearest intersection.
Hit CastRay(const SyntheticScene& scene, double dx, double dy) {
  Hit hit;
  for (const SceneObject& obj : scene.objects) {
    double t = 0.0, u = 0.0, v = 0.0;
    switch (obj.kind) {
      case SurfaceKind::kRect: {
        t = obj.z;
        const double x = dx * t, y = dy * t;
        if (!(x >= obj.x0 && x < obj.x1 && y >= obj.y0 && y < obj.y1)) continue;
        u = x - obj.x0;
        v = y - obj.y0;
        break;
      }
      case SurfaceKind::kWall:
        t = obj.z;
        u = dx * t;
        v = dy * t;
        break;
      case SurfaceKind::kFloor:
        if (!(dy * obj.height > 0.0)) continue;
        t = obj.height / dy;
        u = dx * t;
        v = t;
        break;
    }
    if (t > 0.0 && t < hit.depth) hit = {t, &obj, u, v};
  }
  return hit;
}

std::string_view TextureName(TextureKind kind) {
  switch (kind) {
    case TextureKind::kConstant: return "constant";
    case TextureKind::kChecker: return "checker";
    case TextureKind::kStripes: return "stripes";
    case TextureKind::kSine: return "sine";
  }
  return "constant";
}

TextureKind TextureFromName(const std::string& name) {
  if (name == "constant") return TextureKind::kConstant;
  if (name == "checker") return TextureKind::kChecker;
  if (name == "stripes") return TextureKind::kStripes;
  if (name == "sine") return TextureKind::kSine;
  throw Error(ErrorCode::kParse, "unknown texture '" + name + "'");
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Rgb Texture::Sample(double u, double v) const {
  switch (kind) {
    case TextureKind::kConstant:
      return base;
    case TextureKind::kChecker: {
      const auto cu = static_cast<long long>(std::floor(u / period));
      const auto cv = static_cast<long long>(std::floor(v / period));
      return ((cu + cv) & 1) ? alt : base;
    }
    case TextureKind::kStripes: {
      const auto cu = static_cast<long long>(std::floor(u / period));
      return (cu & 1) ? alt : base;
    }
    case TextureKind::kSine: {
      const double w = 2.0 * std::numbers::pi / period;
      return Mix(base, alt, 0.5 + 0.25 * (std::sin(w * u) + std::sin(w * v)));
    }
  }
  return base;
}

RenderedScene Render(const SyntheticScene& scene) {
  const CameraModel& cam = scene.camera;
  cam.Validate();
  const int ss = std::max(1, scene.supersample);
  RenderedScene out{ColorImage(cam.width, cam.height, 3, 0.0f),
                    DepthImage(cam.width, cam.height),
                    LabelMap(cam.width, cam.height, 1, kIgnoreLabel)};
  for (int r = 0; r < cam.height; ++r) {
    for (int c = 0; c < cam.width; ++c) {
      const Hit center = CastRay(scene, (c - cam.cx) / cam.fx, (r - cam.cy) / cam.fy);
      if (center.object) {
        out.depth.Set(r, c, static_cast<float>(center.depth));
        out.labels.at(r, c) = center.object->class_id;
      }
      double acc[3] = {0.0, 0.0, 0.0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double oc = ss == 1 ? 0.0 : (sx + 0.5) / ss - 0.5;
          const double orow = ss == 1 ? 0.0 : (sy + 0.5) / ss - 0.5;
          const Hit h = ss == 1 ? center
                                : CastRay(scene, (c + oc - cam.cx) / cam.fx,
                                          (r + orow - cam.cy) / cam.fy);
          if (!h.object) continue;
          const Rgb col = h.object->texture.Sample(h.u, h.v);
          acc[0] += col.r;
          acc[1] += col.g;
          acc[2] += col.b;
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        out.rgb.at(r, c, ch) = static_cast<float>(acc[ch] / (ss * ss));
      }
    }
  }
  return out;
}

SyntheticScene ParseScene(const std::string& text) {
  SyntheticScene scene;
  bool have_camera = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::kParse,
                 "scene line " + std::to_string(line_no) + ": " + what);
  };
  auto read_texture = [&](std::istringstream& ss) {
    Texture t;
    std::string kind;
    if (!(ss >> kind >> t.period >> t.base.r >> t.base.g >> t.base.b)) {
      throw fail("expected texture kind period r g b");
    }
    t.kind = TextureFromName(kind);
    t.alt = t.base;
    ss >> t.alt.r >> t.alt.g >> t.alt.b;
    if (!(t.period > 0.0)) throw fail("texture period must be positive");
    return t;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "camera") {
      CameraModel& cam = scene.camera;
      if (!(ss >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height)) {
        throw fail("expected fx fy cx cy width height");
      }
      cam.Validate();
      have_camera = true;
    } else if (key == "supersample") {
      if (!(ss >> scene.supersample) || scene.supersample < 1) {
        throw fail("supersample must be >= 1");
      }
    } else if (key == "rect" || key == "wall" || key == "floor") {
      SceneObject obj;
      int cls = 0;
      if (!(ss >> cls) || cls < 0 || cls >= kIgnoreLabel) throw fail("bad class id");
      obj.class_id = static_cast<std::uint8_t>(cls);
      if (key == "rect") {
        obj.kind = SurfaceKind::kRect;
        if (!(ss >> obj.z >> obj.x0 >> obj.y0 >> obj.x1 >> obj.y1)) {
          throw fail("expected z x0 y0 x1 y1");
        }
      } else if (key == "wall") {
        obj.kind = SurfaceKind::kWall;
        if (!(ss >> obj.z)) throw fail("expected z");
      } else {
        obj.kind = SurfaceKind::kFloor;
        if (!(ss >> obj.height)) throw fail("expected height");
      }
      if (obj.kind != SurfaceKind::kFloor && !(obj.z > 0.0)) {
        throw fail("depth must be positive");
      }
      obj.texture = read_texture(ss);
      scene.objects.push_back(obj);
    } else {
      throw fail("unknown directive '" + key + "'");
    }
  }
  if (!have_camera) throw Error(ErrorCode::kParse, "scene lacks a camera line");
  return scene;
}

std::string SceneToText(const SyntheticScene& scene) {
  std::ostringstream out;
  const CameraModel& cam = scene.camera;
  out << "camera " << Num(cam.fx) << " " << Num(cam.fy) << " " << Num(cam.cx)
      << " " << Num(cam.cy) << " " << cam.width << " " << cam.height << "\n";
  out << "supersample " << scene.supersample << "\n";
  for (const SceneObject& obj : scene.objects) {
    switch (obj.kind) {
      case SurfaceKind::kRect:
        out << "rect " << int{obj.class_id} << " " << Num(obj.z) << " "
            << Num(obj.x0) << " " << Num(obj.y0) << " " << Num(obj.x1) << " "
            << Num(obj.y1);
        break;
      case SurfaceKind::kWall:
        out << "wall " << int{obj.class_id} << " " << Num(obj.z);
        break;
      case SurfaceKind::kFloor:
        out << "floor " << int{obj.class_id} << " " << Num(obj.height);
        break;
    }
    const Texture& t = obj.texture;
    out << " " << TextureName(t.kind) << " " << Num(t.period) << " "
        << Num(t.base.r) << " " << Num(t.base.g) << " " << Num(t.base.b) << " "
        << Num(t.alt.r) << " " << Num(t.alt.g) << " " << Num(t.alt.b) << "\n";
  }
  return out.str();
}

SyntheticScene RandomScene(const RandomSceneOptions& options,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  SyntheticScene scene;
  scene.supersample = options.supersample;
  scene.camera = {options.focal, options.focal, (options.width - 1) / 2.0,
                  (options.height - 1) / 2.0, options.width, options.height};

  if (options.wall_depth > 0.0) {
    SceneObject wall;
    wall.kind = SurfaceKind::kWall;
    wall.class_id = 0;
    wall.z = options.wall_depth;
    const auto lo = static_cast<float>(uniform(0.2, 0.5));
    const auto hi = static_cast<float>(uniform(0.5, 0.8));
    wall.texture = {TextureKind::kSine, options.smooth_period * 2.0,
                    {lo, lo, lo}, {hi, hi, hi}};
    scene.objects.push_back(wall);
  }

  const int n_objects = std::uniform_int_distribution<int>(
      options.min_objects, options.max_objects)(rng);
  for (int k = 0; k < n_objects; ++k) {
    SceneObject obj;
    obj.kind = SurfaceKind::kRect;
    obj.class_id = static_cast<std::uint8_t>(rng() % 3);
    obj.z = uniform(options.min_depth, options.max_depth);
    const double side_x = uniform(options.min_side, options.max_side);
    const double side_y = uniform(options.min_side, options.max_side);
    // Center projects uniformly inside the image.
    const double ci = uniform(0.0, options.width - 1.0);
    const double cj = uniform(0.0, options.height - 1.0);
    const double xc = (ci - scene.camera.cx) * obj.z / options.focal;
    const double yc = (cj - scene.camera.cy) * obj.z / options.focal;
    obj.x0 = xc - side_x / 2;
    obj.x1 = xc + side_x / 2;
    obj.y0 = yc - side_y / 2;
    obj.y1 = yc + side_y / 2;
    const double lo = uniform(0.0, 0.35);
    const double hi = uniform(0.65, 1.0);
    const double tint[3] = {uniform(0.8, 1.0), uniform(0.8, 1.0),
                            uniform(0.8, 1.0)};
    switch (obj.class_id) {
      case 0:
        obj.texture.kind = TextureKind::kSine;
        obj.texture.period = options.smooth_period;
        break;
      case 1:
        obj.texture.kind = TextureKind::kChecker;
        obj.texture.period = options.fine_cell;
        break;
      default:
        obj.texture.kind = TextureKind::kChecker;
        obj.texture.period = options.coarse_cell;
        break;
    }
    obj.texture.base = {static_cast<float>(lo * tint[0]),
                        static_cast<float>(lo * tint[1]),
                        static_cast<float>(lo * tint[2])};
    obj.texture.alt = {static_cast<float>(hi * tint[0]),
                       static_cast<float>(hi * tint[1]),
                       static_cast<float>(hi * tint[2])};
    scene.objects.push_back(obj);
  }
  return scene;
}

}  // namespace surfconv
