#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "surfconv/image.h"
#include "surfconv/pyramid.h"

namespace surfconv {

// Dense float64 array, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  // Element (c, r, col) of a 3-D tensor.
  double& at(int c, int r, int col) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + r) * shape_[2] + col];
  }
  double at(int c, int r, int col) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + r) * shape_[2] + col];
  }

  void Fill(double v);
  bool AllFinite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Cross-correlation with stride 1 and zero padding k/2.
// x: C_in x H x W, w: C_out x C_in x k x k (k odd), b: C_out.
Tensor Conv2dForward(const Tensor& x, const Tensor& w, const Tensor& b);

struct Conv2dGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};

// Gradients of sum(dy * Conv2dForward(x, w, b)).
Conv2dGrads Conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& dy);

struct ConvLayer {
  Tensor weight;  // C_out x C_in x k x k
  Tensor bias;    // C_out

  bool operator==(const ConvLayer&) const = default;
};

// Activations recorded by SegNet::Forward and consumed by Backward.
struct ForwardTrace {
  std::vector<Tensor> layer_inputs;  // input of each conv, post-ReLU
  Tensor logits;
  bool recorded = false;
};

struct SegNetGrads {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;

  void Add(const SegNetGrads& other);
  void Scale(double factor);
};

// Stack of stride-1 convolutions with ReLU between them. Hidden layers use a
// fixed k x k kernel; the classifier is 1x1. Parameter count does not
// depend on the input resolution or on how many pyramid levels are fed.
class SegNet {
 public:
  SegNet() = default;
  SegNet(int in_channels, std::vector<int> hidden_channels, int num_classes,
         int kernel = 3);
  explicit SegNet(std::vector<ConvLayer> layers);

  // He-normal weights, zero biases.
  void InitRandom(std::uint64_t seed);

  int in_channels() const;
  int num_classes() const;
  std::size_t ParameterCount() const;
  const std::vector<ConvLayer>& layers() const { return layers_; }
  std::vector<ConvLayer>& layers() { return layers_; }

  ForwardTrace Forward(const Tensor& x) const;
  // Throws kStateError when the trace was not produced by Forward.
  SegNetGrads Backward(const ForwardTrace& trace, const Tensor& dlogits) const;

  SegNetGrads ZeroGrads() const;
  void ApplySgd(const SegNetGrads& grads, double learning_rate);

  // Binary checkpoint: "SURFCNN1", uint32 layer count, per tensor a rank and
  // its dims (uint32 LE), then every weight and bias as float64 LE.
  void Save(const std::string& path) const;
  static SegNet Load(const std::string& path);

  bool operator==(const SegNet&) const = default;

 private:
  void CheckLayers() const;

  std::vector<ConvLayer> layers_;
};

enum class LossMode {
  kUniform,
  // Each level-n pixel counts (1/s_n)^2 times: its full-resolution footprint.
  kImageAreaReweighted,
};

struct LossConfig {
  LossMode mode = LossMode::kUniform;
  std::uint8_t ignore_label = kIgnoreLabel;
};

// One level's contribution to a loss evaluation.
struct LevelTarget {
  const Tensor* logits = nullptr;  // K x H x W
  const LabelMap* labels = nullptr;
  double scale = 1.0;
  const Image<double>* weights = nullptr;  // optional per-pixel multiplier
};

struct LossResult {
  double loss = 0.0;
  std::vector<Tensor> dlogits;  // one per level, same shape as logits
  std::size_t counted = 0;
  std::size_t correct = 0;
};

// Weighted mean softmax cross-entropy over all non-ignored pixels of all
// levels; weights are renormalized to sum to one across levels.
LossResult MaskedCrossEntropy(std::span<const LevelTarget> levels,
                              const LossConfig& config);

// Network input for one pyramid level: the level image as float64.
Tensor LevelTensor(const PyramidLevel& level);

struct TrainSample {
  std::vector<Tensor> inputs;
  std::vector<LabelMap> labels;
  std::vector<double> scales;
};

// Throws kInvalidArgument when the pyramid carries no labels.
TrainSample SampleFromPyramid(const Pyramid& pyramid);

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  int batch_size = 1;  // images per SGD step
  int threads = 1;
  LossConfig loss;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;       // mean step loss over the epoch
  double pixel_acc = 0.0;  // over counted pixels, before each step's update
};

// SGD with a fixed learning rate. Every step takes one batch of images with
// all of their levels; image order is reshuffled each epoch from `seed`.
// Results are identical for any thread count.
std::vector<EpochStats> TrainSurfConv(SegNet& net,
                                      std::span<const TrainSample> dataset,
                                      const TrainConfig& config);

void WriteLossTrace(const std::string& path,
                    std::span<const EpochStats> trace);

// Arg-max class for every level cell, including cells outside the mask, so
// full-resolution pixels near a level's border always find a prediction.
std::vector<LabelMap> PredictLevels(const SegNet& net, const Pyramid& pyramid);

// PredictLevels followed by Reassemble.
LabelMap Infer(const SegNet& net, const Pyramid& pyramid);

}  // namespace surfconv
