#pragma once

#include <span>
#include <vector>

#include "surfconv/convnet.h"
#include "surfconv/d4.h"
#include "surfconv/eval.h"
#include "surfconv/geom.h"

namespace surfconv {

struct Frame {
  ColorImage rgb;
  DepthImage depth;
  LabelMap labels;
  CameraModel camera;
};

struct ExperimentOptions {
  int levels = 1;
  double gamma = 1.0;
  int num_classes = 3;
  std::vector<int> hidden{8, 8};
  int kernel = 3;
  bool keep_context = false;
  TrainConfig train;
};

struct ExperimentResult {
  LevelPartition partition;
  std::size_t parameter_count = 0;
  std::vector<EpochStats> trace;
  SegmentationMetrics image_metrics;    // every pixel weighs 1
  SegmentationMetrics surface_metrics;  // pixels weighted by 3D footprint
};

// Fits one partition over all training depths, builds pyramids, trains a
// fresh SegNet seeded from options.train.seed, then scores full-resolution
// reassembled predictions on the test frames.
ExperimentResult RunExperiment(std::span<const Frame> train,
                               std::span<const Frame> test,
                               const ExperimentOptions& options);

}  // namespace surfconv
