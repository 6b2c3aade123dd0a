#include "surfconv/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "surfconv/error.h"

namespace surfconv {

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one class");
  }
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0.0);
}

double ConfusionMatrix::Total() const {
  double total = 0.0;
  for (double v : counts_) total += v;
  return total;
}

void ConfusionMatrix::Add(int gt, int pred, double weight) {
  if (gt < 0 || gt >= num_classes_ || pred < 0 || pred >= num_classes_) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "label pair (" + std::to_string(gt) + ", " +
                    std::to_string(pred) + ") outside " +
                    std::to_string(num_classes_) + " classes");
  }
  if (!(weight >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "negative pixel weight");
  }
  counts_[static_cast<std::size_t>(gt) * num_classes_ + pred] += weight;
}

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw Error(ErrorCode::kShapeMismatch, "confusion matrix sizes differ");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
}

void Accumulate(ConfusionMatrix& cm, const LabelMap& pred, const LabelMap& gt,
                const Image<double>* weights, std::uint8_t ignore_label) {
  if (!pred.SameSize(gt) || (weights && !weights->SameSize(gt))) {
    throw Error(ErrorCode::kShapeMismatch,
                "prediction, ground truth and weights differ in size");
  }
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      const std::uint8_t g = gt.at(r, c);
      if (g == ignore_label) continue;
      cm.Add(g, pred.at(r, c), weights ? weights->at(r, c) : 1.0);
    }
  }
}

SegmentationMetrics ComputeMetrics(const ConfusionMatrix& cm,
                                   AbsentClassPolicy policy) {
  const double total = cm.Total();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kEmptyMatrix, "confusion matrix is empty");
  }
  const int k = cm.num_classes();
  SegmentationMetrics m;
  m.class_iou.resize(k);
  double trace = 0.0;
  double iou_sum = 0.0;
  int iou_count = 0;
  for (int c = 0; c < k; ++c) {
    const double tp = cm.at(c, c);
    double gt_sum = 0.0, pred_sum = 0.0;
    for (int o = 0; o < k; ++o) {
      gt_sum += cm.at(c, o);
      pred_sum += cm.at(o, c);
    }
    trace += tp;
    const double uni = gt_sum + pred_sum - tp;
    if (uni > 0.0) {
      m.class_iou[c] = tp / uni;
      iou_sum += tp / uni;
      ++iou_count;
    } else if (policy == AbsentClassPolicy::kCountAsOne) {
      iou_sum += 1.0;
      ++iou_count;
    }
  }
  m.pixel_acc = trace / total;
  m.mean_iou = iou_count ? iou_sum / iou_count : 0.0;
  return m;
}

std::string MetricsCsv(const SegmentationMetrics& m) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", m.mean_iou);
  out << "metric,value\nmean_iou," << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.10g", m.pixel_acc);
  out << "pixel_acc," << buf << "\n";
  for (std::size_t c = 0; c < m.class_iou.size(); ++c) {
    out << "iou_" << c << ",";
    if (m.class_iou[c]) {
      std::snprintf(buf, sizeof(buf), "%.10g", *m.class_iou[c]);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string MetricsTable(const SegmentationMetrics& m, const std::string& tag) {
  std::ostringstream out;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "IOU_%s  %6.2f\nAcc_%s  %6.2f\n", tag.c_str(),
                100.0 * m.mean_iou, tag.c_str(), 100.0 * m.pixel_acc);
  out << buf;
  for (std::size_t c = 0; c < m.class_iou.size(); ++c) {
    if (m.class_iou[c]) {
      std::snprintf(buf, sizeof(buf), "  class %3zu  %6.2f\n", c,
                    100.0 * *m.class_iou[c]);
    } else {
      std::snprintf(buf, sizeof(buf), "  class %3zu     n/a\n", c);
    }
    out << buf;
  }
  return out.str();
}

namespace {

struct Grid {
  std::array<long long, 3> dims;
  double resolution;
  Box3 bounds;

  // Voxel index, or -1 when the point lies outside the bounds.
  long long Index(const Point3& p) const {
    const double coords[3] = {p.x, p.y, p.z};
    const double lo[3] = {bounds.min.x, bounds.min.y, bounds.min.z};
    const double hi[3] = {bounds.max.x, bounds.max.y, bounds.max.z};
    long long idx[3];
    for (int a = 0; a < 3; ++a) {
      if (!(coords[a] >= lo[a] && coords[a] <= hi[a])) return -1;
      idx[a] = std::min(static_cast<long long>((coords[a] - lo[a]) / resolution),
                        dims[a] - 1);
    }
    return idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]);
  }
};

Grid MakeGrid(double resolution, const Box3& bounds) {
  if (!(resolution > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "voxel resolution must be positive");
  }
  const double extent[3] = {bounds.max.x - bounds.min.x,
                            bounds.max.y - bounds.min.y,
                            bounds.max.z - bounds.min.z};
  Grid grid{{}, resolution, bounds};
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (!(extent[a] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "occupancy bounds are empty");
    }
    // Tolerate extents that are whole multiples up to rounding.
    grid.dims[a] = std::max(1LL, static_cast<long long>(
                                     std::ceil(extent[a] / resolution - 1e-9)));
    total *= static_cast<double>(grid.dims[a]);
  }
  if (total > 9.0e18) {
    throw Error(ErrorCode::kGridTooLarge, "voxel grid index overflows");
  }
  return grid;
}

}  // namespace

OccupancyReport Occupancy(const PointCloud& cloud, double resolution,
                          const Box3& bounds) {
  if (cloud.points.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "point cloud is empty");
  }
  const Grid grid = MakeGrid(resolution, bounds);
  std::unordered_set<long long> occupied;
  occupied.reserve(cloud.points.size());
  for (const Point3& p : cloud.points) {
    const long long idx = grid.Index(p);
    if (idx >= 0) occupied.insert(idx);
  }
  if (occupied.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "no points inside the bounds");
  }
  OccupancyReport report;
  report.resolution = resolution;
  report.dims = grid.dims;
  report.occupied = static_cast<long long>(occupied.size());
  report.total = grid.dims[0] * grid.dims[1] * grid.dims[2];
  report.fraction = static_cast<double>(report.occupied) /
                    static_cast<double>(report.total);
  return report;
}

std::vector<std::uint8_t> DenseOccupancyGrid(const PointCloud& cloud,
                                             double resolution,
                                             const Box3& bounds,
                                             long long max_cells) {
  if (cloud.points.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "point cloud is empty");
  }
  const Grid grid = MakeGrid(resolution, bounds);
  const double cells = static_cast<double>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  if (cells > static_cast<double>(max_cells)) {
    throw Error(ErrorCode::kGridTooLarge,
                "dense grid of " + std::to_string(cells) + " cells exceeds cap");
  }
  std::vector<std::uint8_t> dense(static_cast<std::size_t>(cells), 0);
  for (const Point3& p : cloud.points) {
    const long long idx = grid.Index(p);
    if (idx >= 0) dense[static_cast<std::size_t>(idx)] = 1;
  }
  return dense;
}

Box3 CloudBounds(const PointCloud& cloud) {
  if (cloud.points.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "point cloud is empty");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box3 box{{inf, inf, inf}, {-inf, -inf, -inf}};
  for (const Point3& p : cloud.points) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y),
               std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y),
               std::max(box.max.z, p.z)};
  }
  return box;
}

}  // namespace surfconv
