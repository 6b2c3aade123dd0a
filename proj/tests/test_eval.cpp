#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scenes.h"
#include "surfconv/error.h"
#include "surfconv/eval.h"

namespace surfconv {
namespace {

LabelMap FromRows(std::initializer_list<std::initializer_list<int>> rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.begin()->size());
  LabelMap m(w, h);
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (int v : row) m.at(r, c++) = static_cast<std::uint8_t>(v);
    ++r;
  }
  return m;
}

// Straight from the definitions: per-class TP / (TP + FP + FN) by counting.
SegmentationMetrics OracleMetrics(const LabelMap& pred, const LabelMap& gt,
                                  const Image<double>* w, int k) {
  SegmentationMetrics m;
  m.class_iou.resize(k);
  double correct = 0.0, total = 0.0, sum = 0.0;
  int present = 0;
  for (int cls = 0; cls < k; ++cls) {
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (int r = 0; r < gt.height(); ++r) {
      for (int c = 0; c < gt.width(); ++c) {
        const int g = gt.at(r, c);
        if (g == kIgnoreLabel) continue;
        const int p = pred.at(r, c);
        const double wt = w ? w->at(r, c) : 1.0;
        if (g == cls && p == cls) tp += wt;
        if (g != cls && p == cls) fp += wt;
        if (g == cls && p != cls) fn += wt;
      }
    }
    if (tp + fp + fn > 0.0) {
      m.class_iou[cls] = tp / (tp + fp + fn);
      sum += *m.class_iou[cls];
      ++present;
    }
  }
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (gt.at(r, c) == kIgnoreLabel) continue;
      const double wt = w ? w->at(r, c) : 1.0;
      total += wt;
      if (gt.at(r, c) == pred.at(r, c)) correct += wt;
    }
  }
  m.mean_iou = present ? sum / present : 0.0;
  m.pixel_acc = correct / total;
  return m;
}

TEST(Accumulate, PerfectPredictionFillsDiagonal) {
  const LabelMap gt = FromRows({{0, 1}, {1, 0}});
  ConfusionMatrix cm(2);
  Accumulate(cm, gt, gt);
  EXPECT_EQ(cm.at(0, 0), 2.0);
  EXPECT_EQ(cm.at(1, 1), 2.0);
  EXPECT_EQ(cm.at(0, 1), 0.0);
  EXPECT_EQ(cm.Total(), 4.0);
  const auto m = ComputeMetrics(cm);
  EXPECT_EQ(m.mean_iou, 1.0);
  EXPECT_EQ(m.pixel_acc, 1.0);
}

TEST(Accumulate, IgnoredPixelsLeaveMatrixUnchanged) {
  const LabelMap gt(3, 2, 1, kIgnoreLabel);
  const LabelMap pred(3, 2, 1, 1);
  ConfusionMatrix cm(2);
  cm.Add(0, 0, 5.0);
  const ConfusionMatrix before = cm;
  Accumulate(cm, pred, gt);
  EXPECT_EQ(cm, before);
}

TEST(Metrics, SymmetricConfusion) {
  ConfusionMatrix cm(2);
  cm.Add(0, 0, 2);
  cm.Add(0, 1, 1);
  cm.Add(1, 0, 1);
  cm.Add(1, 1, 2);
  const auto m = ComputeMetrics(cm);
  EXPECT_DOUBLE_EQ(*m.class_iou[0], 0.5);
  EXPECT_DOUBLE_EQ(*m.class_iou[1], 0.5);
  EXPECT_DOUBLE_EQ(m.mean_iou, 0.5);
  EXPECT_DOUBLE_EQ(m.pixel_acc, 4.0 / 6.0);
}

TEST(Metrics, WrongClassScoresZero) {
  const LabelMap gt(4, 4, 1, 0);
  const LabelMap pred(4, 4, 1, 1);
  ConfusionMatrix cm(2);
  Accumulate(cm, pred, gt);
  const auto m = ComputeMetrics(cm);
  EXPECT_EQ(*m.class_iou[0], 0.0);
  EXPECT_EQ(*m.class_iou[1], 0.0);
  EXPECT_EQ(m.mean_iou, 0.0);
  EXPECT_EQ(m.pixel_acc, 0.0);
}

TEST(Metrics, AbsentClassPolicy) {
  ConfusionMatrix cm(3);
  cm.Add(0, 0, 3);
  cm.Add(1, 0, 1);
  cm.Add(1, 1, 1);
  const auto excl = ComputeMetrics(cm, AbsentClassPolicy::kExclude);
  EXPECT_FALSE(excl.class_iou[2].has_value());
  EXPECT_DOUBLE_EQ(excl.mean_iou, (0.75 + 0.5) / 2.0);
  const auto one = ComputeMetrics(cm, AbsentClassPolicy::kCountAsOne);
  EXPECT_FALSE(one.class_iou[2].has_value());
  EXPECT_DOUBLE_EQ(one.mean_iou, (0.75 + 0.5 + 1.0) / 3.0);
  EXPECT_EQ(excl.pixel_acc, one.pixel_acc);
}

TEST(Metrics, MatchesBruteForceOnRandomMaps) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 5);
    LabelMap gt(8, 8), pred(8, 8);
    Image<double> w(8, 8);
    std::uniform_real_distribution<double> uw(0.0, 3.0);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        gt.at(r, c) = rng() % 7 == 0 ? kIgnoreLabel
                                     : static_cast<std::uint8_t>(rng() % k);
        pred.at(r, c) = static_cast<std::uint8_t>(rng() % k);
        w.at(r, c) = uw(rng);
      }
    }
    gt.at(0, 0) = 0;
    for (const Image<double>* wp : {static_cast<const Image<double>*>(nullptr),
                                    static_cast<const Image<double>*>(&w)}) {
      ConfusionMatrix cm(k);
      Accumulate(cm, pred, gt, wp);
      const auto got = ComputeMetrics(cm);
      const auto want = OracleMetrics(pred, gt, wp, k);
      ASSERT_NEAR(got.mean_iou, want.mean_iou, 1e-12);
      ASSERT_NEAR(got.pixel_acc, want.pixel_acc, 1e-12);
      for (int c = 0; c < k; ++c) {
        ASSERT_EQ(got.class_iou[c].has_value(), want.class_iou[c].has_value());
        if (want.class_iou[c]) {
          ASSERT_NEAR(*got.class_iou[c], *want.class_iou[c], 1e-12);
        }
      }
    }
  }
}

TEST(Metrics, UnitWeightsEqualImageMetrics) {
  std::mt19937 rng(3);
  LabelMap gt(16, 12), pred(16, 12);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 16; ++c) {
      gt.at(r, c) = static_cast<std::uint8_t>(rng() % 4);
      pred.at(r, c) = static_cast<std::uint8_t>(rng() % 4);
    }
  }
  const Image<double> ones(16, 12, 1, 1.0);
  ConfusionMatrix a(4), b(4);
  Accumulate(a, pred, gt);
  Accumulate(b, pred, gt, &ones);
  EXPECT_EQ(a, b);
}

TEST(Metrics, InvariantToWeightScale) {
  std::mt19937 rng(5);
  LabelMap gt(10, 10), pred(10, 10);
  Image<double> w(10, 10), w2(10, 10), w3(10, 10);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      gt.at(r, c) = static_cast<std::uint8_t>(rng() % 3);
      pred.at(r, c) = static_cast<std::uint8_t>(rng() % 3);
      w.at(r, c) = 0.1 + (rng() % 100) / 10.0;
      w2.at(r, c) = 8.0 * w.at(r, c);
      w3.at(r, c) = 3.7 * w.at(r, c);
    }
  }
  ConfusionMatrix a(3), b(3), c(3);
  Accumulate(a, pred, gt, &w);
  Accumulate(b, pred, gt, &w2);
  Accumulate(c, pred, gt, &w3);
  const auto ma = ComputeMetrics(a), mb = ComputeMetrics(b), mc = ComputeMetrics(c);
  EXPECT_EQ(ma.mean_iou, mb.mean_iou);
  EXPECT_EQ(ma.pixel_acc, mb.pixel_acc);
  EXPECT_NEAR(ma.mean_iou, mc.mean_iou, 1e-12);
  EXPECT_NEAR(ma.pixel_acc, mc.pixel_acc, 1e-12);
}

TEST(Metrics, Errors) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(ComputeMetrics(cm), Error);
  try {
    ComputeMetrics(cm);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMatrix);
  }
  try {
    Accumulate(cm, LabelMap(2, 2), LabelMap(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  const Image<double> w(3, 3, 1, 1.0);
  try {
    Accumulate(cm, LabelMap(2, 2), LabelMap(2, 2), &w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  try {
    Accumulate(cm, LabelMap(2, 2, 1, 2), LabelMap(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLabelOutOfRange);
  }
  EXPECT_THROW(ConfusionMatrix(0), Error);
  ConfusionMatrix three(3);
  EXPECT_THROW(cm.Merge(three), Error);
}

TEST(Metrics, MergeAddsCounts) {
  ConfusionMatrix a(2), b(2);
  a.Add(0, 1, 2.0);
  b.Add(0, 1, 3.0);
  b.Add(1, 1, 1.0);
  a.Merge(b);
  EXPECT_EQ(a.at(0, 1), 5.0);
  EXPECT_EQ(a.at(1, 1), 1.0);
}

TEST(Metrics, CsvAndTable) {
  ConfusionMatrix cm(3);
  cm.Add(0, 0, 1);
  cm.Add(1, 1, 1);
  cm.Add(1, 0, 2);
  const auto m = ComputeMetrics(cm);
  EXPECT_EQ(MetricsCsv(m),
            "metric,value\nmean_iou,0.3333333333\npixel_acc,0.5\n"
            "iou_0,0.3333333333\niou_1,0.3333333333\niou_2,\n");
  const std::string table = MetricsTable(m, "surf");
  EXPECT_NE(table.find("IOU_surf   33.33"), std::string::npos) << table;
  EXPECT_NE(table.find("Acc_surf   50.00"), std::string::npos) << table;
  EXPECT_NE(table.find("n/a"), std::string::npos);
}

// Points on the plane z = 0.5 spread densely over the unit square.
PointCloud Slab(double spacing) {
  PointCloud cloud;
  const int n = static_cast<int>(std::lround(1.0 / spacing));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cloud.points.push_back({(i + 0.5) * spacing, (j + 0.5) * spacing, 0.5});
    }
  }
  return cloud;
}

const Box3 kUnitBox{{0, 0, 0}, {1, 1, 1}};

TEST(Occupancy, PlaneInUnitCube) {
  const PointCloud cloud = Slab(0.0025);
  const auto coarse = Occupancy(cloud, 0.1, kUnitBox);
  EXPECT_EQ(coarse.dims, (std::array<long long, 3>{10, 10, 10}));
  EXPECT_EQ(coarse.occupied, 100);
  EXPECT_DOUBLE_EQ(coarse.fraction, 0.10);
  const auto fine = Occupancy(cloud, 0.01, kUnitBox);
  EXPECT_EQ(fine.total, 1000000);
  EXPECT_EQ(fine.occupied, 10000);
  EXPECT_DOUBLE_EQ(fine.fraction, 0.01);
}

TEST(Occupancy, HalvingVoxelRoughlyHalvesFractionOnSurfaces) {
  // A tilted plane through the cube, sampled well below the finest voxel.
  PointCloud cloud;
  for (int i = 0; i < 800; ++i) {
    for (int j = 0; j < 800; ++j) {
      const double x = (i + 0.5) / 800.0, y = (j + 0.5) / 800.0;
      cloud.points.push_back({x, y, 0.2 + 0.5 * x + 0.1 * y});
    }
  }
  for (double res : {0.1, 0.05, 0.025}) {
    const double ratio = Occupancy(cloud, res, kUnitBox).fraction /
                         Occupancy(cloud, res / 2.0, kUnitBox).fraction;
    EXPECT_NEAR(ratio, 2.0, 0.5) << "at " << res;
  }
}

TEST(Occupancy, OutsidePointsIgnored) {
  PointCloud cloud = Slab(0.05);
  cloud.points.push_back({5, 5, 5});
  cloud.points.push_back({-1, 0.5, 0.5});
  EXPECT_EQ(Occupancy(cloud, 0.1, kUnitBox).occupied, 100);
  PointCloud outside;
  outside.points.push_back({2, 2, 2});
  EXPECT_THROW(Occupancy(outside, 0.1, kUnitBox), Error);
}

TEST(Occupancy, DenseGridAgreesWithSparseCount) {
  const PointCloud cloud = Slab(0.01);
  const auto dense = DenseOccupancyGrid(cloud, 0.1, kUnitBox, 1000);
  ASSERT_EQ(dense.size(), 1000u);
  long long set = 0;
  for (auto v : dense) set += v;
  EXPECT_EQ(set, Occupancy(cloud, 0.1, kUnitBox).occupied);
  // z = 0.5 lands in layer 5, x fastest.
  EXPECT_EQ(dense[3 + 10 * (7 + 10 * 5)], 1);
  EXPECT_EQ(dense[3 + 10 * (7 + 10 * 4)], 0);
  try {
    DenseOccupancyGrid(cloud, 0.1, kUnitBox, 999);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridTooLarge);
  }
}

TEST(Occupancy, Errors) {
  try {
    Occupancy(PointCloud{}, 0.1, kUnitBox);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCloud);
  }
  const PointCloud cloud = Slab(0.1);
  EXPECT_THROW(Occupancy(cloud, 0.0, kUnitBox), Error);
  EXPECT_THROW(Occupancy(cloud, 0.1, Box3{{0, 0, 0}, {1, 0, 1}}), Error);
  EXPECT_THROW(CloudBounds(PointCloud{}), Error);
}

TEST(Occupancy, CloudBoundsAndRoomScan) {
  PointCloud cloud;
  cloud.points = {{1, -2, 3}, {-1, 4, 0.5}, {0, 0, 7}};
  const Box3 b = CloudBounds(cloud);
  EXPECT_EQ(b.min.x, -1);
  EXPECT_EQ(b.min.y, -2);
  EXPECT_EQ(b.min.z, 0.5);
  EXPECT_EQ(b.max.x, 1);
  EXPECT_EQ(b.max.y, 4);
  EXPECT_EQ(b.max.z, 7);

  const auto room = testing::ScanRoom(400, 300, 200);
  const Box3 rb = CloudBounds(room.cloud);
  EXPECT_GE(rb.min.x, room.bounds.min.x - 1e-9);
  EXPECT_LE(rb.max.z, room.bounds.max.z + 1e-9);
  const auto rep = Occupancy(room.cloud, 0.1, room.bounds);
  EXPECT_GT(rep.fraction, 0.0);
  EXPECT_LT(rep.fraction, 0.5);
}

}  // namespace
}  // namespace surfconv
