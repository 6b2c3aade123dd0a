#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "surfconv/error.h"

namespace surfconv {

// Planar multi-channel image, layout C x H x W, row-major within a channel.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) {
      throw Error(ErrorCode::kInvalidArgument, "invalid image dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return data_.empty(); }

  T& at(int row, int col, int channel = 0) {
    return data_[channel * plane_size() +
                 static_cast<std::size_t>(row) * width_ + col];
  }
  const T& at(int row, int col, int channel = 0) const {
    return data_[channel * plane_size() +
                 static_cast<std::size_t>(row) * width_ + col];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool SameSize(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool SameSize(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using LabelMap = Image<std::uint8_t>;
using Mask = Image<std::uint8_t>;
using ColorImage = Image<float>;

// Label value for pixels excluded from training and evaluation.
inline constexpr std::uint8_t kIgnoreLabel = 255;

}  // namespace surfconv
