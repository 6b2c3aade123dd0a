#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surfconv/convnet.h"
#include "surfconv/densify.h"
#include "surfconv/encode.h"
#include "surfconv/geom.h"

namespace surfconv {

// Pipeline settings. Every field has a default; a flat "key = value" file
// overrides them and command-line flags override the file.
struct Config {
  CameraModel camera{525.0, 525.0, 319.5, 239.5, 640, 480};
  double depth_scale = 1000.0;  // PGM depth units per meter
  Vec3 gravity{0.0, 1.0, 0.0};
  double ground_height = 1.0;
  double gamma = 1.0;
  int levels = 4;
  double delta = 1.0;  // surface receptive-field radius, meters
  double densify_max_edge = 20.0;
  double densify_max_depth_gap = 1.0;
  LossMode loss = LossMode::kUniform;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: SURFCONV_THREADS or hardware concurrency
  bool keep_context = false;
  int num_classes = 3;
  std::vector<int> hidden{8, 8};
  int kernel = 3;
  int epochs = 50;
  double learning_rate = 0.05;
  int batch_size = 1;

  // Applies one key=value pair. Throws kParse on unknown keys or bad values.
  void Set(const std::string& key, const std::string& value);
  int ResolvedThreads() const;
};

Config ParseConfig(const std::string& text);
Config LoadConfig(const std::string& path);

}  // namespace surfconv
