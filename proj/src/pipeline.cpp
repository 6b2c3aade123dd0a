#include "surfconv/pipeline.h"

#include "surfconv/encode.h"
#include "surfconv/error.h"
#include "surfconv/pyramid.h"

namespace surfconv {

ExperimentResult RunExperiment(std::span<const Frame> train,
                               std::span<const Frame> test,
                               const ExperimentOptions& options) {
  if (train.empty() || test.empty()) {
    throw Error(ErrorCode::kEmptyInput, "experiment needs train and test frames");
  }
  std::vector<float> depths;
  for (const Frame& f : train) {
    const auto d = f.depth.ValidDepths();
    depths.insert(depths.end(), d.begin(), d.end());
  }
  ExperimentResult result;
  result.partition = FitPartition(depths, options.gamma,
                                  static_cast<std::size_t>(options.levels));

  PyramidOptions pyr_options;
  pyr_options.keep_context = options.keep_context;
  std::vector<TrainSample> samples;
  samples.reserve(train.size());
  for (const Frame& f : train) {
    samples.push_back(SampleFromPyramid(
        BuildPyramid(f.rgb, f.depth, &f.labels, result.partition, pyr_options)));
  }

  SegNet net(train.front().rgb.channels(), options.hidden, options.num_classes,
             options.kernel);
  net.InitRandom(options.train.seed);
  result.parameter_count = net.ParameterCount();
  result.trace = TrainSurfConv(net, samples, options.train);

  ConfusionMatrix image_cm(options.num_classes);
  ConfusionMatrix surface_cm(options.num_classes);
  for (const Frame& f : test) {
    const Pyramid pyr =
        BuildPyramid(f.rgb, f.depth, nullptr, result.partition, pyr_options);
    const LabelMap pred = Infer(net, pyr);
    const Image<double> weights = SurfaceWeights(f.depth, f.camera);
    Accumulate(image_cm, pred, f.labels);
    Accumulate(surface_cm, pred, f.labels, &weights);
  }
  result.image_metrics = ComputeMetrics(image_cm);
  result.surface_metrics = ComputeMetrics(surface_cm);
  return result;
}

}  // namespace surfconv
