#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surfconv/geom.h"
#include "surfconv/image.h"

namespace surfconv {

// K x K weighted counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  double at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
  }
  double Total() const;

  // Adds `weight` at (gt, pred). Throws kLabelOutOfRange.
  void Add(int gt, int pred, double weight = 1.0);
  void Merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_classes_;
  std::vector<double> counts_;
};

// Pixels whose ground truth is the ignore label are skipped. A null weight
// map counts every pixel once (image-wise metrics); a surface-weight map
// gives the surface-wise variants.
void Accumulate(ConfusionMatrix& cm, const LabelMap& pred, const LabelMap& gt,
                const Image<double>* weights = nullptr,
                std::uint8_t ignore_label = kIgnoreLabel);

enum class AbsentClassPolicy {
  kExclude,     // classes with no gt and no prediction leave the mean
  kCountAsOne,  // ... or count as a perfect score
};

struct SegmentationMetrics {
  double mean_iou = 0.0;
  double pixel_acc = 0.0;
  // nullopt for classes absent from both gt and prediction.
  std::vector<std::optional<double>> class_iou;
};

SegmentationMetrics ComputeMetrics(
    const ConfusionMatrix& cm,
    AbsentClassPolicy policy = AbsentClassPolicy::kExclude);

// "metric,value" rows followed by "iou_<k>,value" (empty when absent).
std::string MetricsCsv(const SegmentationMetrics& m);
std::string MetricsTable(const SegmentationMetrics& m, const std::string& tag);

struct Box3 {
  Point3 min;
  Point3 max;
};

struct OccupancyReport {
  double resolution = 0.0;
  std::array<long long, 3> dims{};
  long long occupied = 0;
  long long total = 0;
  double fraction = 0.0;
};

// Counts distinct voxels that hold at least one point inside `bounds`,
// using a hash set, so memory grows with the point count only.
OccupancyReport Occupancy(const PointCloud& cloud, double resolution,
                          const Box3& bounds);

// Dense 0/1 grid (x fastest) for dumping; throws kGridTooLarge above
// max_cells.
std::vector<std::uint8_t> DenseOccupancyGrid(const PointCloud& cloud,
                                             double resolution,
                                             const Box3& bounds,
                                             long long max_cells);

// Axis-aligned bounds of the cloud. Throws kEmptyCloud.
Box3 CloudBounds(const PointCloud& cloud);

}  // namespace surfconv
