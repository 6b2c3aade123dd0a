#include "surfconv/densify.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/polygon/voronoi.hpp>

#include "surfconv/error.h"
#include "surfconv/parallel.h"

namespace surfconv {

namespace {

using VoronoiPoint = boost::polygon::point_data<int>;
using VoronoiDiagram = boost::polygon::voronoi_diagram<double>;

// Twice the signed area, exact for integer pixel coordinates.
long long Orient(const MeshVertex& a, const MeshVertex& b,
                 const MeshVertex& c) {
  const auto ax = static_cast<long long>(a.i), ay = static_cast<long long>(a.j);
  const auto bx = static_cast<long long>(b.i), by = static_cast<long long>(b.j);
  const auto cx = static_cast<long long>(c.i), cy = static_cast<long long>(c.j);
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

bool KeepTriangle(const TriangleMesh& mesh, const std::array<int, 3>& t,
                  const DensifyOptions& options) {
  for (int e = 0; e < 3; ++e) {
    const MeshVertex& a = mesh.vertices[t[e]];
    const MeshVertex& b = mesh.vertices[t[(e + 1) % 3]];
    if (std::hypot(a.i - b.i, a.j - b.j) > options.max_edge) return false;
    if (std::abs(a.depth - b.depth) > options.max_depth_gap) return false;
  }
  return true;
}

}  // namespace

SparseDepth::SparseDepth(int width, int height)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sparse depth needs a 1x1 grid");
  }
  slot_.assign(static_cast<std::size_t>(width) * height, 0);
}

void SparseDepth::Add(int row, int col, double depth) {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) {
    throw Error(ErrorCode::kInvalidArgument, "sample outside the image");
  }
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kNonPositiveDepth, "sample depth must be positive");
  }
  int& slot = slot_[static_cast<std::size_t>(row) * width_ + col];
  if (slot == 0) {
    samples_.push_back({row, col, depth});
    slot = static_cast<int>(samples_.size());
  } else {
    double& existing = samples_[slot - 1].depth;
    existing = std::min(existing, depth);
  }
}

TriangleMesh Triangulate(const SparseDepth& sparse,
                         const DensifyOptions& options) {
  const auto& samples = sparse.samples();
  if (samples.size() < 3) {
    throw Error(ErrorCode::kTooFewSamples,
                "triangulation needs at least 3 samples");
  }
  TriangleMesh mesh;
  std::vector<VoronoiPoint> sites;
  mesh.vertices.reserve(samples.size());
  sites.reserve(samples.size());
  for (const DepthSample& s : samples) {
    mesh.vertices.push_back({static_cast<double>(s.col),
                             static_cast<double>(s.row), s.depth});
    sites.emplace_back(s.col, s.row);
  }

  // The Delaunay triangulation is the dual of the Voronoi diagram: every
  // Voronoi vertex is surrounded by the cells of cocircular sites. Degree-3
  // vertices give one triangle; cocircular groups are fanned.
  VoronoiDiagram vd;
  boost::polygon::construct_voronoi(sites.begin(), sites.end(), &vd);
  std::vector<int> ring;
  for (const auto& vertex : vd.vertices()) {
    ring.clear();
    const auto* start = vertex.incident_edge();
    const auto* edge = start;
    do {
      ring.push_back(static_cast<int>(edge->cell()->source_index()));
      edge = edge->rot_next();
    } while (edge != start);
    for (std::size_t k = 1; k + 1 < ring.size(); ++k) {
      std::array<int, 3> tri{ring[0], ring[k], ring[k + 1]};
      const long long orient = Orient(mesh.vertices[tri[0]],
                                      mesh.vertices[tri[1]],
                                      mesh.vertices[tri[2]]);
      if (orient == 0) continue;
      if (orient < 0) std::swap(tri[1], tri[2]);
      if (KeepTriangle(mesh, tri, options)) mesh.triangles.push_back(tri);
    }
  }
  return mesh;
}

DepthImage Rasterize(const TriangleMesh& mesh, int width, int height,
                     int threads) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "raster size must be positive");
  }
  DepthImage out(width, height);
  constexpr int kBandRows = 32;
  const int bands = (height + kBandRows - 1) / kBandRows;
  ParallelFor(static_cast<std::size_t>(bands), threads,
              [&](std::size_t band_begin, std::size_t band_end) {
    const int row_begin = static_cast<int>(band_begin) * kBandRows;
    const int row_end = std::min(height, static_cast<int>(band_end) * kBandRows);
    std::vector<double> zbuf(
        static_cast<std::size_t>(row_end - row_begin) * width,
        std::numeric_limits<double>::infinity());
    for (const auto& tri : mesh.triangles) {
      const MeshVertex& a = mesh.vertices[tri[0]];
      const MeshVertex& b = mesh.vertices[tri[1]];
      const MeshVertex& c = mesh.vertices[tri[2]];
      const double area = (b.i - a.i) * (c.j - a.j) - (b.j - a.j) * (c.i - a.i);
      if (area == 0.0) continue;
      const int r0 = std::max(row_begin,
                              static_cast<int>(std::ceil(std::min({a.j, b.j, c.j}))));
      const int r1 = std::min(row_end - 1,
                              static_cast<int>(std::floor(std::max({a.j, b.j, c.j}))));
      const int c0 = std::max(0, static_cast<int>(std::ceil(std::min({a.i, b.i, c.i}))));
      const int c1 = std::min(width - 1,
                              static_cast<int>(std::floor(std::max({a.i, b.i, c.i}))));
      const double eps = 1e-12 * std::abs(area);
      for (int r = r0; r <= r1; ++r) {
        for (int col = c0; col <= c1; ++col) {
          const double pi = col, pj = r;
          const double wa = ((b.i - pi) * (c.j - pj) - (b.j - pj) * (c.i - pi)) / area;
          const double wb = ((c.i - pi) * (a.j - pj) - (c.j - pj) * (a.i - pi)) / area;
          const double wc = 1.0 - wa - wb;
          if (wa * area < -eps || wb * area < -eps || wc * area < -eps) continue;
          const double z = wa * a.depth + wb * b.depth + wc * c.depth;
          double& slot = zbuf[static_cast<std::size_t>(r - row_begin) * width + col];
          slot = std::min(slot, z);
        }
      }
    }
    for (int r = row_begin; r < row_end; ++r) {
      for (int col = 0; col < width; ++col) {
        const double z = zbuf[static_cast<std::size_t>(r - row_begin) * width + col];
        if (std::isfinite(z)) out.Set(r, col, static_cast<float>(z));
      }
    }
  });
  return out;
}

SparseDepth ReadSparseText(const std::string& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  SparseDepth sparse(width, height);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    int row = 0, col = 0;
    double depth = 0.0;
    if (!(ss >> row)) continue;
    if (!(ss >> col >> depth)) {
      throw Error(ErrorCode::kParse,
                  path + ":" + std::to_string(line_no) + ": expected row col depth");
    }
    sparse.Add(row, col, depth);
  }
  return sparse;
}

SparseDepth SparseFromCloud(const PointCloud& cloud, const CameraModel& cam) {
  cam.Validate();
  SparseDepth sparse(cam.width, cam.height);
  for (const Point3& p : cloud.points) {
    if (!(p.z > 0.0)) continue;
    const ImagePoint q = Project(cam, p);
    const long col = std::lround(q.i);
    const long row = std::lround(q.j);
    if (row < 0 || row >= cam.height || col < 0 || col >= cam.width) continue;
    sparse.Add(static_cast<int>(row), static_cast<int>(col), p.z);
  }
  return sparse;
}

}  // namespace surfconv
