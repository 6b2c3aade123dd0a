#include "surfconv/pyramid.h"

#include <algorithm>
#include <cmath>

#include "surfconv/error.h"
#include "surfconv/parallel.h"

namespace surfconv {

namespace {

struct Tap {
  int pixel;
  double weight;  // overlap length in full-resolution pixel units
};

// For each cell along one axis, the full-resolution pixels it overlaps.
std::vector<std::vector<Tap>> AxisTaps(int extent, int cells, double scale) {
  std::vector<std::vector<Tap>> taps(cells);
  for (int cell = 0; cell < cells; ++cell) {
    const double lo = std::max((cell - 0.5) / scale, -0.5);
    const double hi = std::min((cell + 0.5) / scale, extent - 0.5);
    if (!(hi > lo)) continue;
    const int first = std::max(0, static_cast<int>(std::floor(lo + 0.5)));
    const int last = std::min(extent - 1, static_cast<int>(std::ceil(hi - 0.5)));
    for (int p = first; p <= last; ++p) {
      const double overlap =
          std::min(hi, p + 0.5) - std::max(lo, p - 0.5);
      if (overlap > 0.0) taps[cell].push_back({p, overlap});
    }
  }
  return taps;
}

PyramidLevel BuildLevel(const ColorImage& image, const LabelMap* labels,
                        const Image<std::uint8_t>& owner, std::size_t level,
                        double scale, bool keep_context) {
  const int width = image.width();
  const int height = image.height();
  const int channels = image.channels();
  PyramidLevel out;
  out.level_index = level;
  out.scale = scale;
  const int w_n = ScaledExtent(width, scale);
  const int h_n = ScaledExtent(height, scale);
  out.image = ColorImage(w_n, h_n, channels, 0.0f);
  out.valid = Mask(w_n, h_n, 1, 0);
  if (labels) out.labels = LabelMap(w_n, h_n, 1, kIgnoreLabel);

  const auto row_taps = AxisTaps(height, h_n, scale);
  const auto col_taps = AxisTaps(width, w_n, scale);
  const auto owned = static_cast<std::uint8_t>(level);

  std::vector<double> sum(channels);
  std::vector<std::pair<std::uint8_t, double>> votes;
  for (int rn = 0; rn < h_n; ++rn) {
    for (int cn = 0; cn < w_n; ++cn) {
      double area = 0.0;
      double level_area = 0.0;
      std::fill(sum.begin(), sum.end(), 0.0);
      votes.clear();
      for (const Tap& tr : row_taps[rn]) {
        for (const Tap& tc : col_taps[cn]) {
          const double w = tr.weight * tc.weight;
          area += w;
          const bool in_level = owner.at(tr.pixel, tc.pixel) == owned;
          if (!in_level && !keep_context) continue;
          for (int ch = 0; ch < channels; ++ch) {
            sum[ch] += w * image.at(tr.pixel, tc.pixel, ch);
          }
          if (!in_level) continue;
          level_area += w;
          if (labels) {
            const std::uint8_t l = labels->at(tr.pixel, tc.pixel);
            if (l == kIgnoreLabel) continue;
            auto it = std::find_if(votes.begin(), votes.end(),
                                   [l](const auto& v) { return v.first == l; });
            if (it == votes.end()) {
              votes.emplace_back(l, w);
            } else {
              it->second += w;
            }
          }
        }
      }
      const bool valid = area > 0.0 && 2.0 * level_area >= area * (1.0 - 1e-12);
      if (keep_context && area > 0.0) {
        for (int ch = 0; ch < channels; ++ch) {
          out.image.at(rn, cn, ch) = static_cast<float>(sum[ch] / area);
        }
      }
      if (!valid) continue;
      out.valid.at(rn, cn) = 1;
      if (!keep_context) {
        for (int ch = 0; ch < channels; ++ch) {
          out.image.at(rn, cn, ch) = static_cast<float>(sum[ch] / level_area);
        }
      }
      if (labels && !votes.empty()) {
        std::sort(votes.begin(), votes.end());
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it) {
          if (it->second > best->second) best = it;
        }
        out.labels->at(rn, cn) = best->first;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> LevelScales(const LevelPartition& part) {
  part.Validate();
  const double far = part.rep_depths.back();
  std::vector<double> scales;
  scales.reserve(part.n_levels());
  for (double z : part.rep_depths) scales.push_back(z / far);
  scales.back() = 1.0;
  return scales;
}

int ScaledExtent(int extent, double scale) {
  return std::max(1, static_cast<int>(std::lround(extent * scale)));
}

Pyramid BuildPyramid(const ColorImage& image, const DepthImage& depth,
                     const LabelMap* labels, const LevelPartition& part,
                     const PyramidOptions& options) {
  if (!image.SameSize(depth.width(), depth.height()) ||
      (labels && !labels->SameSize(depth.width(), depth.height()))) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image, depth and labels must share dimensions");
  }
  if (part.n_levels() >= kNoLevel) {
    throw Error(ErrorCode::kInvalidArgument, "too many levels");
  }
  const auto scales = LevelScales(part);

  Pyramid pyr;
  pyr.partition = part;
  pyr.source_width = depth.width();
  pyr.source_height = depth.height();
  pyr.owner = Image<std::uint8_t>(depth.width(), depth.height(), 1, kNoLevel);
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      if (depth.valid(r, c)) {
        pyr.owner.at(r, c) =
            static_cast<std::uint8_t>(AssignLevel(part, depth.depth(r, c)));
      }
    }
  }

  pyr.levels.resize(part.n_levels());
  ParallelFor(part.n_levels(), options.threads,
              [&](std::size_t begin, std::size_t end) {
                for (std::size_t n = begin; n < end; ++n) {
                  pyr.levels[n] = BuildLevel(image, labels, pyr.owner, n,
                                             scales[n], options.keep_context);
                }
              });
  return pyr;
}

LabelMap Reassemble(const Pyramid& pyramid,
                    std::span<const LabelMap> predictions) {
  if (predictions.size() != pyramid.levels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "one prediction per pyramid level required");
  }
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    if (!predictions[n].SameSize(pyramid.levels[n].valid)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "prediction size differs from level " + std::to_string(n));
    }
  }
  LabelMap out(pyramid.source_width, pyramid.source_height, 1, kIgnoreLabel);
  for (int r = 0; r < pyramid.source_height; ++r) {
    for (int c = 0; c < pyramid.source_width; ++c) {
      const std::uint8_t level = pyramid.owner.at(r, c);
      if (level == kNoLevel) continue;
      const LabelMap& pred = predictions[level];
      const double s = pyramid.levels[level].scale;
      const int rn = std::clamp(static_cast<int>(std::lround(r * s)), 0,
                                pred.height() - 1);
      const int cn = std::clamp(static_cast<int>(std::lround(c * s)), 0,
                                pred.width() - 1);
      out.at(r, c) = pred.at(rn, cn);
    }
  }
  return out;
}

}  // namespace surfconv
