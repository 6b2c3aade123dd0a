#include "surfconv/convnet.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "surfconv/error.h"
#include "surfconv/parallel.h"

namespace surfconv {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'U', 'R', 'F', 'C', 'N', 'N', '1'};

std::string ShapeString(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += "x";
    s += std::to_string(shape[k]);
  }
  return s + ")";
}

void RequireShape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

void PutU32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::kParse, "truncated checkpoint");
  }
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void PutF64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double GetF64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error(ErrorCode::kParse, "truncated checkpoint");
  }
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (int d : shape_) {
    if (d < 0) throw Error(ErrorCode::kShapeMismatch, "negative tensor dim");
    n *= static_cast<std::size_t>(d);
  }
  data_.assign(n, fill);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Conv2dForward(const Tensor& x, const Tensor& w, const Tensor& b) {
  RequireShape(x.shape().size() == 3 && w.shape().size() == 4 &&
                   b.shape().size() == 1,
               "conv2d expects x CxHxW, w OxIxkxk, b O");
  const int c_in = x.dim(0), height = x.dim(1), width = x.dim(2);
  const int c_out = w.dim(0), k = w.dim(2);
  RequireShape(w.dim(1) == c_in && w.dim(3) == k && b.dim(0) == c_out,
               "conv2d shape mismatch: x" + ShapeString(x.shape()) + " w" +
                   ShapeString(w.shape()) + " b" + ShapeString(b.shape()));
  RequireShape(k % 2 == 1, "conv2d kernel size must be odd");
  const int pad = k / 2;

  Tensor y({c_out, height, width});
  for (int co = 0; co < c_out; ++co) {
    double* y_plane = y.data() + static_cast<std::size_t>(co) * height * width;
    std::fill(y_plane, y_plane + static_cast<std::size_t>(height) * width, b[co]);
    for (int ci = 0; ci < c_in; ++ci) {
      const double* x_plane =
          x.data() + static_cast<std::size_t>(ci) * height * width;
      const double* w_kernel =
          w.data() + (static_cast<std::size_t>(co) * c_in + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        const int r0 = std::max(0, -dy), r1 = std::min(height, height - dy);
        for (int kx = 0; kx < k; ++kx) {
          const int dx = kx - pad;
          const int c0 = std::max(0, -dx), c1 = std::min(width, width - dx);
          const double wv = w_kernel[ky * k + kx];
          for (int r = r0; r < r1; ++r) {
            double* y_row = y_plane + static_cast<std::size_t>(r) * width;
            const double* x_row =
                x_plane + static_cast<std::size_t>(r + dy) * width + dx;
            for (int c = c0; c < c1; ++c) y_row[c] += wv * x_row[c];
          }
        }
      }
    }
  }
  return y;
}

Conv2dGrads Conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  RequireShape(x.shape().size() == 3 && w.shape().size() == 4 &&
                   dy.shape().size() == 3,
               "conv2d backward expects 3-D x/dy and 4-D w");
  const int c_in = x.dim(0), height = x.dim(1), width = x.dim(2);
  const int c_out = w.dim(0), k = w.dim(2);
  RequireShape(w.dim(1) == c_in && dy.dim(0) == c_out && dy.dim(1) == height &&
                   dy.dim(2) == width,
               "conv2d backward shape mismatch");
  const int pad = k / 2;

  Conv2dGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({c_out})};
  for (int co = 0; co < c_out; ++co) {
    const double* dy_plane =
        dy.data() + static_cast<std::size_t>(co) * height * width;
    g.db[co] = std::accumulate(
        dy_plane, dy_plane + static_cast<std::size_t>(height) * width, 0.0);
    for (int ci = 0; ci < c_in; ++ci) {
      const double* x_plane =
          x.data() + static_cast<std::size_t>(ci) * height * width;
      double* dx_plane = g.dx.data() + static_cast<std::size_t>(ci) * height * width;
      const std::size_t w_off = (static_cast<std::size_t>(co) * c_in + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        const int oy = ky - pad;
        const int r0 = std::max(0, -oy), r1 = std::min(height, height - oy);
        for (int kx = 0; kx < k; ++kx) {
          const int ox = kx - pad;
          const int c0 = std::max(0, -ox), c1 = std::min(width, width - ox);
          const double wv = w[w_off + ky * k + kx];
          double acc = 0.0;
          for (int r = r0; r < r1; ++r) {
            const double* dy_row = dy_plane + static_cast<std::size_t>(r) * width;
            const std::size_t src = static_cast<std::size_t>(r + oy) * width + ox;
            const double* x_row = x_plane + src;
            double* dx_row = dx_plane + src;
            for (int c = c0; c < c1; ++c) {
              acc += dy_row[c] * x_row[c];
              dx_row[c] += wv * dy_row[c];
            }
          }
          g.dw[w_off + ky * k + kx] += acc;
        }
      }
    }
  }
  return g;
}

void SegNetGrads::Add(const SegNetGrads& other) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    for (std::size_t k = 0; k < weight[l].size(); ++k) weight[l][k] += other.weight[l][k];
    for (std::size_t k = 0; k < bias[l].size(); ++k) bias[l][k] += other.bias[l][k];
  }
}

void SegNetGrads::Scale(double factor) {
  for (auto& t : weight) for (double& v : t.values()) v *= factor;
  for (auto& t : bias) for (double& v : t.values()) v *= factor;
}

SegNet::SegNet(int in_channels, std::vector<int> hidden_channels,
               int num_classes, int kernel) {
  if (in_channels < 1 || num_classes < 1 || kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid SegNet configuration");
  }
  int prev = in_channels;
  for (int h : hidden_channels) {
    if (h < 1) throw Error(ErrorCode::kInvalidArgument, "hidden width < 1");
    layers_.push_back({Tensor({h, prev, kernel, kernel}), Tensor({h})});
    prev = h;
  }
  layers_.push_back({Tensor({num_classes, prev, 1, 1}), Tensor({num_classes})});
}

SegNet::SegNet(std::vector<ConvLayer> layers) : layers_(std::move(layers)) {
  CheckLayers();
}

void SegNet::CheckLayers() const {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty SegNet");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& w = layers_[l].weight.shape();
    const auto& b = layers_[l].bias.shape();
    RequireShape(w.size() == 4 && b.size() == 1 && b[0] == w[0] &&
                     w[2] == w[3] && w[2] % 2 == 1,
                 "malformed layer " + std::to_string(l));
    if (l > 0) {
      RequireShape(w[1] == layers_[l - 1].weight.dim(0),
                   "layer " + std::to_string(l) + " input width mismatch");
    }
  }
}

void SegNet::InitRandom(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : layers_) {
    const int fan_in = layer.weight.dim(1) * layer.weight.dim(2) * layer.weight.dim(3);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (double& v : layer.weight.values()) v = dist(rng);
    layer.bias.Fill(0.0);
  }
}

int SegNet::in_channels() const { return layers_.front().weight.dim(1); }
int SegNet::num_classes() const { return layers_.back().weight.dim(0); }

std::size_t SegNet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

ForwardTrace SegNet::Forward(const Tensor& x) const {
  RequireShape(x.shape().size() == 3 && x.dim(0) == in_channels(),
               "SegNet input must be " + std::to_string(in_channels()) +
                   " x H x W, got " + ShapeString(x.shape()));
  ForwardTrace trace;
  trace.layer_inputs.reserve(layers_.size());
  Tensor act = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Tensor out = Conv2dForward(act, layers_[l].weight, layers_[l].bias);
    trace.layer_inputs.push_back(std::move(act));
    if (l + 1 < layers_.size()) {
      for (double& v : out.values()) v = std::max(v, 0.0);
    }
    act = std::move(out);
  }
  trace.logits = std::move(act);
  trace.recorded = true;
  return trace;
}

SegNetGrads SegNet::Backward(const ForwardTrace& trace,
                             const Tensor& dlogits) const {
  if (!trace.recorded || trace.layer_inputs.size() != layers_.size()) {
    throw Error(ErrorCode::kStateError, "backward without a recorded forward");
  }
  RequireShape(dlogits.shape() == trace.logits.shape(),
               "dlogits shape differs from logits");
  SegNetGrads grads = ZeroGrads();
  Tensor upstream = dlogits;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Conv2dGrads g =
        Conv2dBackward(trace.layer_inputs[l], layers_[l].weight, upstream);
    grads.weight[l] = std::move(g.dw);
    grads.bias[l] = std::move(g.db);
    if (l == 0) break;
    // The input of layer l is the ReLU output of layer l-1.
    const Tensor& relu_out = trace.layer_inputs[l];
    for (std::size_t k = 0; k < g.dx.size(); ++k) {
      if (!(relu_out[k] > 0.0)) g.dx[k] = 0.0;
    }
    upstream = std::move(g.dx);
  }
  return grads;
}

SegNetGrads SegNet::ZeroGrads() const {
  SegNetGrads g;
  for (const auto& layer : layers_) {
    g.weight.emplace_back(layer.weight.shape());
    g.bias.emplace_back(layer.bias.shape());
  }
  return g;
}

void SegNet::ApplySgd(const SegNetGrads& grads, double learning_rate) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& w = layers_[l].weight.values();
    auto& b = layers_[l].bias.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * grads.weight[l][k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= learning_rate * grads.bias[l][k];
  }
}

void SegNet::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  PutU32(out, static_cast<std::uint32_t>(layers_.size()));
  for (const auto& layer : layers_) {
    for (const Tensor* t : {&layer.weight, &layer.bias}) {
      PutU32(out, static_cast<std::uint32_t>(t->shape().size()));
      for (int d : t->shape()) PutU32(out, static_cast<std::uint32_t>(d));
    }
  }
  for (const auto& layer : layers_) {
    for (double v : layer.weight.values()) PutF64(out, v);
    for (double v : layer.bias.values()) PutF64(out, v);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

SegNet SegNet::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::kParse, "not a SegNet checkpoint: " + path);
  }
  const std::uint32_t n_layers = GetU32(in);
  if (n_layers == 0 || n_layers > 1024) {
    throw Error(ErrorCode::kParse, "implausible layer count in " + path);
  }
  std::vector<ConvLayer> layers(n_layers);
  for (auto& layer : layers) {
    for (Tensor* t : {&layer.weight, &layer.bias}) {
      const std::uint32_t rank = GetU32(in);
      if (rank == 0 || rank > 4) throw Error(ErrorCode::kParse, "bad tensor rank");
      std::vector<int> shape(rank);
      for (int& d : shape) {
        const std::uint32_t v = GetU32(in);
        if (v == 0 || v > (1u << 20)) throw Error(ErrorCode::kParse, "bad dim");
        d = static_cast<int>(v);
      }
      *t = Tensor(shape);
    }
  }
  for (auto& layer : layers) {
    for (double& v : layer.weight.values()) v = GetF64(in);
    for (double& v : layer.bias.values()) v = GetF64(in);
  }
  return SegNet(std::move(layers));
}

LossResult MaskedCrossEntropy(std::span<const LevelTarget> levels,
                              const LossConfig& config) {
  LossResult result;
  double total_weight = 0.0;
  // First pass: validate and total the pixel weights.
  for (const LevelTarget& lv : levels) {
    if (!lv.logits || !lv.labels) {
      throw Error(ErrorCode::kInvalidArgument, "level target lacks data");
    }
    const Tensor& z = *lv.logits;
    RequireShape(z.shape().size() == 3 && z.dim(1) == lv.labels->height() &&
                     z.dim(2) == lv.labels->width(),
                 "logits and labels disagree in size");
    RequireShape(!lv.weights || lv.weights->SameSize(*lv.labels),
                 "weight map size differs from labels");
    if (!(lv.scale > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "level scale must be positive");
    }
    const double level_weight = config.mode == LossMode::kImageAreaReweighted
                                    ? 1.0 / (lv.scale * lv.scale)
                                    : 1.0;
    const int classes = z.dim(0);
    for (int r = 0; r < lv.labels->height(); ++r) {
      for (int c = 0; c < lv.labels->width(); ++c) {
        const std::uint8_t l = lv.labels->at(r, c);
        if (l == config.ignore_label) continue;
        if (l >= classes) {
          throw Error(ErrorCode::kLabelOutOfRange,
                      "label " + std::to_string(l) + " >= " + std::to_string(classes));
        }
        total_weight += level_weight * (lv.weights ? lv.weights->at(r, c) : 1.0);
      }
    }
  }
  if (!(total_weight > 0.0)) {
    throw Error(ErrorCode::kAllPixelsIgnored, "no labeled pixels in loss");
  }

  std::vector<double> prob;
  for (const LevelTarget& lv : levels) {
    const Tensor& z = *lv.logits;
    const int classes = z.dim(0), height = z.dim(1), width = z.dim(2);
    Tensor grad(z.shape());
    const double level_weight = config.mode == LossMode::kImageAreaReweighted
                                    ? 1.0 / (lv.scale * lv.scale)
                                    : 1.0;
    prob.resize(classes);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const std::uint8_t l = lv.labels->at(r, c);
        if (l == config.ignore_label) continue;
        const double w = level_weight * (lv.weights ? lv.weights->at(r, c) : 1.0) /
                         total_weight;
        double zmax = z.at(0, r, c);
        int best = 0;
        for (int k = 1; k < classes; ++k) {
          if (z.at(k, r, c) > zmax) {
            zmax = z.at(k, r, c);
            best = k;
          }
        }
        double denom = 0.0;
        for (int k = 0; k < classes; ++k) {
          prob[k] = std::exp(z.at(k, r, c) - zmax);
          denom += prob[k];
        }
        result.loss += w * (std::log(denom) - (z.at(l, r, c) - zmax));
        for (int k = 0; k < classes; ++k) {
          grad.at(k, r, c) = w * (prob[k] / denom - (k == l ? 1.0 : 0.0));
        }
        ++result.counted;
        result.correct += best == l;
      }
    }
    result.dlogits.push_back(std::move(grad));
  }
  return result;
}

Tensor LevelTensor(const PyramidLevel& level) {
  const ColorImage& img = level.image;
  Tensor t({img.channels(), img.height(), img.width()});
  std::copy(img.data().begin(), img.data().end(), t.values().begin());
  return t;
}

TrainSample SampleFromPyramid(const Pyramid& pyramid) {
  TrainSample sample;
  for (const PyramidLevel& level : pyramid.levels) {
    if (!level.labels) {
      throw Error(ErrorCode::kInvalidArgument, "pyramid level without labels");
    }
    sample.inputs.push_back(LevelTensor(level));
    sample.labels.push_back(*level.labels);
    sample.scales.push_back(level.scale);
  }
  return sample;
}

namespace {

struct StepOutput {
  SegNetGrads grads;
  double loss = 0.0;
  std::size_t counted = 0;
  std::size_t correct = 0;
  bool has_pixels = false;
};

StepOutput ImageGradients(const SegNet& net, const TrainSample& sample,
                          const LossConfig& loss_config) {
  StepOutput out;
  std::vector<ForwardTrace> traces;
  std::vector<LevelTarget> targets;
  traces.reserve(sample.inputs.size());
  for (std::size_t n = 0; n < sample.inputs.size(); ++n) {
    traces.push_back(net.Forward(sample.inputs[n]));
  }
  for (std::size_t n = 0; n < sample.inputs.size(); ++n) {
    targets.push_back({&traces[n].logits, &sample.labels[n], sample.scales[n]});
  }
  LossResult loss;
  try {
    loss = MaskedCrossEntropy(targets, loss_config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllPixelsIgnored) throw;
    out.grads = net.ZeroGrads();
    return out;
  }
  out.has_pixels = true;
  out.loss = loss.loss;
  out.counted = loss.counted;
  out.correct = loss.correct;
  out.grads = net.ZeroGrads();
  for (std::size_t n = 0; n < traces.size(); ++n) {
    out.grads.Add(net.Backward(traces[n], loss.dlogits[n]));
  }
  return out;
}

}  // namespace

std::vector<EpochStats> TrainSurfConv(SegNet& net,
                                      std::span<const TrainSample> dataset,
                                      const TrainConfig& config) {
  if (dataset.empty()) {
    throw Error(ErrorCode::kEmptyInput, "training dataset is empty");
  }
  if (config.batch_size < 1 || config.epochs < 0 ||
      !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training configuration");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> trace;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t steps = 0, counted = 0, correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<StepOutput> outputs(end - start);
      ParallelFor(outputs.size(), config.threads,
                  [&](std::size_t b, std::size_t e) {
                    for (std::size_t k = b; k < e; ++k) {
                      outputs[k] = ImageGradients(net, dataset[order[start + k]],
                                                  config.loss);
                    }
                  });
      SegNetGrads total = net.ZeroGrads();
      double batch_loss = 0.0;
      std::size_t used = 0;
      for (const StepOutput& o : outputs) {
        if (!o.has_pixels) continue;
        total.Add(o.grads);
        batch_loss += o.loss;
        counted += o.counted;
        correct += o.correct;
        ++used;
      }
      if (used == 0) continue;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kDivergedLoss,
                    "non-finite loss in epoch " + std::to_string(epoch));
      }
      total.Scale(1.0 / static_cast<double>(used));
      net.ApplySgd(total, config.learning_rate);
      loss_sum += batch_loss / static_cast<double>(used);
      ++steps;
    }
    if (steps == 0) {
      throw Error(ErrorCode::kAllPixelsIgnored, "dataset has no labeled pixels");
    }
    for (const auto& layer : net.layers()) {
      if (!layer.weight.AllFinite() || !layer.bias.AllFinite()) {
        throw Error(ErrorCode::kDivergedLoss, "parameters became non-finite");
      }
    }
    trace.push_back({epoch, loss_sum / static_cast<double>(steps),
                     counted ? static_cast<double>(correct) / counted : 0.0});
  }
  return trace;
}

void WriteLossTrace(const std::string& path, std::span<const EpochStats> trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "epoch,loss,pixel_acc\n";
  char buf[96];
  for (const EpochStats& s : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", s.epoch, s.loss,
                  s.pixel_acc);
    out << buf;
  }
}

std::vector<LabelMap> PredictLevels(const SegNet& net, const Pyramid& pyramid) {
  std::vector<LabelMap> preds;
  for (const PyramidLevel& level : pyramid.levels) {
    const ForwardTrace trace = net.Forward(LevelTensor(level));
    const Tensor& z = trace.logits;
    LabelMap pred(level.image.width(), level.image.height(), 1, kIgnoreLabel);
    for (int r = 0; r < pred.height(); ++r) {
      for (int c = 0; c < pred.width(); ++c) {
        int best = 0;
        for (int k = 1; k < z.dim(0); ++k) {
          if (z.at(k, r, c) > z.at(best, r, c)) best = k;
        }
        pred.at(r, c) = static_cast<std::uint8_t>(best);
      }
    }
    preds.push_back(std::move(pred));
  }
  return preds;
}

LabelMap Infer(const SegNet& net, const Pyramid& pyramid) {
  const auto preds = PredictLevels(net, pyramid);
  return Reassemble(pyramid, preds);
}

}  // namespace surfconv
