#include "surfconv/io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "surfconv/error.h"

namespace surfconv {

namespace fs = std::filesystem;

namespace {

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string HeaderToken(std::istream& in, const std::string& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw Error(ErrorCode::kParse, "truncated header: " + path);
  return token;
}

int HeaderInt(std::istream& in, const std::string& path) {
  const std::string tok = HeaderToken(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "bad header field '" + tok + "' in " + path);
  }
}

void ReadExact(std::istream& in, void* dst, std::size_t bytes,
               const std::string& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw Error(ErrorCode::kParse, "truncated pixel data: " + path);
  }
}

std::uint32_t ByteSwap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
         (v >> 24);
}

std::uint8_t ToByte(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Extension(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Image<float> ReadPfm(const std::string& path) {
  auto in = OpenIn(path);
  const std::string magic = HeaderToken(in, path);
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw Error(ErrorCode::kParse, "not a PFM file: " + path);
  }
  const int width = HeaderInt(in, path);
  const int height = HeaderInt(in, path);
  const std::string scale_tok = HeaderToken(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "bad PFM scale in " + path);
  }
  if (scale == 0.0) throw Error(ErrorCode::kParse, "zero PFM scale: " + path);
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);

  Image<float> image(width, height, channels);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(width) * channels);
  for (int r = height - 1; r >= 0; --r) {
    ReadExact(in, row.data(), row.size() * 4, path);
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        std::uint32_t bits = row[static_cast<std::size_t>(c) * channels + ch];
        if (swap) bits = ByteSwap32(bits);
        image.at(r, c, ch) = std::bit_cast<float>(bits);
      }
    }
  }
  return image;
}

void WritePfm(const std::string& path, const Image<float>& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "PFM supports 1 or 3 channels, got " +
                    std::to_string(image.channels()));
  }
  auto out = OpenOut(path);
  out << (image.channels() == 1 ? "Pf" : "PF") << "\n"
      << image.width() << " " << image.height() << "\n-1.0\n";
  const bool swap = std::endian::native != std::endian::little;
  std::vector<std::uint32_t> row(static_cast<std::size_t>(image.width()) *
                                 image.channels());
  for (int r = image.height() - 1; r >= 0; --r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < image.channels(); ++ch) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(image.at(r, c, ch));
        row[static_cast<std::size_t>(c) * image.channels() + ch] =
            swap ? ByteSwap32(bits) : bits;
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

Image<std::uint16_t> ReadPgm(const std::string& path) {
  auto in = OpenIn(path);
  if (HeaderToken(in, path) != "P5") {
    throw Error(ErrorCode::kParse, "not a binary PGM file: " + path);
  }
  const int width = HeaderInt(in, path);
  const int height = HeaderInt(in, path);
  const int maxval = HeaderInt(in, path);
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorCode::kParse, "bad PGM maxval in " + path);
  }
  Image<std::uint16_t> image(width, height);
  if (maxval < 256) {
    std::vector<std::uint8_t> buf(image.plane_size());
    ReadExact(in, buf.data(), buf.size(), path);
    std::copy(buf.begin(), buf.end(), image.data().begin());
  } else {
    std::vector<std::uint8_t> buf(image.plane_size() * 2);
    ReadExact(in, buf.data(), buf.size(), path);
    for (std::size_t k = 0; k < image.plane_size(); ++k) {
      image.data()[k] =
          static_cast<std::uint16_t>((buf[2 * k] << 8) | buf[2 * k + 1]);
    }
  }
  return image;
}

void WritePgm8(const std::string& path, const Image<std::uint8_t>& image) {
  auto out = OpenOut(path);
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data().data()),
            static_cast<std::streamsize>(image.plane_size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

void WritePgm16(const std::string& path, const Image<std::uint16_t>& image) {
  auto out = OpenOut(path);
  out << "P5\n" << image.width() << " " << image.height() << "\n65535\n";
  std::vector<std::uint8_t> buf(image.plane_size() * 2);
  for (std::size_t k = 0; k < image.plane_size(); ++k) {
    buf[2 * k] = static_cast<std::uint8_t>(image.data()[k] >> 8);
    buf[2 * k + 1] = static_cast<std::uint8_t>(image.data()[k] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

ColorImage ReadPpm(const std::string& path) {
  auto in = OpenIn(path);
  if (HeaderToken(in, path) != "P6") {
    throw Error(ErrorCode::kParse, "not a binary PPM file: " + path);
  }
  const int width = HeaderInt(in, path);
  const int height = HeaderInt(in, path);
  const int maxval = HeaderInt(in, path);
  if (maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::kParse, "only 8-bit PPM supported: " + path);
  }
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(width) * height * 3);
  ReadExact(in, buf.data(), buf.size(), path);
  ColorImage image(width, height, 3);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        image.at(r, c, ch) =
            buf[(static_cast<std::size_t>(r) * width + c) * 3 + ch] /
            static_cast<float>(maxval);
      }
    }
  }
  return image;
}

void WritePpm(const std::string& path, const ColorImage& image) {
  if (image.channels() != 3 && image.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "PPM needs 1 or 3 channels");
  }
  auto out = OpenOut(path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<std::uint8_t> buf(image.plane_size() * 3);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const int src = image.channels() == 3 ? ch : 0;
        buf[(static_cast<std::size_t>(r) * image.width() + c) * 3 + ch] =
            ToByte(image.at(r, c, src));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

ColorImage ReadPng(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"),
                                             &std::fclose);
  if (!file) throw Error(ErrorCode::kIo, "cannot read " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  int width = 0;
  int height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParse, "malformed PNG: " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (int r = 0; r < height; ++r) {
    rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * 3;
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  ColorImage image(width, height, 3);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        image.at(r, c, ch) =
            pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch] /
            255.0f;
      }
    }
  }
  return image;
}

ColorImage ReadColor(const std::string& path) {
  const std::string ext = Extension(path);
  if (ext == ".png") return ReadPng(path);
  if (ext == ".ppm") return ReadPpm(path);
  if (ext == ".pfm") return ReadPfm(path);
  throw Error(ErrorCode::kInvalidArgument, "unsupported color format: " + path);
}

DepthImage ReadDepth(const std::string& path, double depth_scale) {
  const std::string ext = Extension(path);
  if (ext == ".pfm") {
    const Image<float> raw = ReadPfm(path);
    if (raw.channels() != 1) {
      throw Error(ErrorCode::kParse, "depth PFM must have one channel");
    }
    return DepthImage::FromValues(raw.width(), raw.height(), raw.data());
  }
  if (ext == ".pgm") {
    if (!(depth_scale > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "depth scale must be positive");
    }
    const auto raw = ReadPgm(path);
    std::vector<float> values(raw.plane_size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = static_cast<float>(raw.data()[k] / depth_scale);
    }
    return DepthImage::FromValues(raw.width(), raw.height(), values);
  }
  throw Error(ErrorCode::kInvalidArgument, "unsupported depth format: " + path);
}

void WriteDepth(const std::string& pfm_path, const std::string& mask_path,
                const DepthImage& depth) {
  WritePfm(pfm_path, depth.depth_plane());
  Mask mask(depth.width(), depth.height());
  for (std::size_t k = 0; k < mask.plane_size(); ++k) {
    mask.data()[k] = depth.valid_mask().data()[k] ? 255 : 0;
  }
  WritePgm8(mask_path, mask);
}

LabelMap ReadLabels(const std::string& path) {
  const auto raw = ReadPgm(path);
  LabelMap labels(raw.width(), raw.height());
  for (std::size_t k = 0; k < raw.plane_size(); ++k) {
    if (raw.data()[k] > 255) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label value above 255 in " + path);
    }
    labels.data()[k] = static_cast<std::uint8_t>(raw.data()[k]);
  }
  return labels;
}

void WriteLabels(const std::string& path, const LabelMap& labels) {
  WritePgm8(path, labels);
}

PointCloud ReadPly(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) {
    throw Error(ErrorCode::kParse, "not a PLY file: " + path);
  }
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = fmt == "ascii";
    } else if (key == "element") {
      std::string name;
      ss >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ss >> count;
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (key == "end_header") {
      break;
    }
  }
  if (!ascii) throw Error(ErrorCode::kParse, "only ASCII PLY supported");
  auto index_of = [&](const std::string& name) -> int {
    auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) {
    throw Error(ErrorCode::kParse, "PLY lacks x/y/z properties");
  }
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  const int il = index_of("label");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.points.reserve(count);
  if (has_color) cloud.color.emplace();
  if (il >= 0) cloud.label.emplace();
  std::vector<double> values(props.size());
  for (std::size_t n = 0; n < count; ++n) {
    for (double& v : values) {
      if (!(in >> v)) throw Error(ErrorCode::kParse, "truncated PLY: " + path);
    }
    cloud.points.push_back({values[ix], values[iy], values[iz]});
    if (has_color) {
      cloud.color->push_back({static_cast<float>(values[ir] / 255.0),
                              static_cast<float>(values[ig] / 255.0),
                              static_cast<float>(values[ib] / 255.0)});
    }
    if (il >= 0) {
      cloud.label->push_back(static_cast<std::uint8_t>(values[il]));
    }
  }
  return cloud;
}

void WritePly(const std::string& path, const PointCloud& cloud) {
  cloud.Validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.color) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (cloud.label) out << "property uchar label\n";
  out << "end_header\n";
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    const Point3& p = cloud.points[n];
    out << FormatDouble(p.x) << " " << FormatDouble(p.y) << " "
        << FormatDouble(p.z);
    if (cloud.color) {
      const Rgb& c = (*cloud.color)[n];
      out << " " << int{ToByte(c.r)} << " " << int{ToByte(c.g)} << " "
          << int{ToByte(c.b)};
    }
    if (cloud.label) out << " " << int{(*cloud.label)[n]};
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

void DumpPyramid(const std::string& dir, const Pyramid& pyramid) {
  fs::create_directories(dir);
  const fs::path root(dir);
  std::ofstream manifest(root / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir);
  manifest << "surfconv_pyramid 1\n"
           << "source " << pyramid.source_width << " " << pyramid.source_height
           << "\n"
           << "gamma " << FormatDouble(pyramid.partition.gamma) << "\n"
           << "boundaries";
  for (double b : pyramid.partition.boundaries) {
    manifest << " " << FormatDouble(b);
  }
  manifest << "\nrep_depths";
  for (double z : pyramid.partition.rep_depths) {
    manifest << " " << FormatDouble(z);
  }
  manifest << "\nlevels " << pyramid.levels.size() << "\n";
  WritePgm8((root / "owner.pgm").string(), pyramid.owner);

  for (const PyramidLevel& level : pyramid.levels) {
    const std::string stem = "level_" + std::to_string(level.level_index);
    const int channels = level.image.channels();
    manifest << "level " << level.level_index << " "
             << FormatDouble(level.scale) << " " << level.image.width() << " "
             << level.image.height() << " " << channels << " "
             << (level.labels ? 1 : 0) << "\n";
    if (channels == 1 || channels == 3) {
      WritePfm((root / (stem + ".pfm")).string(), level.image);
    } else {
      for (int ch = 0; ch < channels; ++ch) {
        Image<float> plane(level.image.width(), level.image.height());
        std::copy_n(level.image.data().begin() + ch * plane.plane_size(),
                    plane.plane_size(), plane.data().begin());
        WritePfm((root / (stem + "_c" + std::to_string(ch) + ".pfm")).string(),
                 plane);
      }
    }
    WritePgm8((root / (stem + "_mask.pgm")).string(), level.valid);
    if (level.labels) {
      WritePgm8((root / (stem + "_labels.pgm")).string(), *level.labels);
    }
  }
  if (!manifest) throw Error(ErrorCode::kIo, "write failed in " + dir);
}

Pyramid LoadPyramid(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream manifest(root / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::kIo, "no manifest in " + dir);
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::kParse, "pyramid manifest: " + what);
  };
  auto read_doubles = [&](const std::string& key) {
    std::string line;
    std::getline(manifest, line);
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw fail("expected " + key);
    std::vector<double> values;
    std::string tok;
    while (ss >> tok) values.push_back(std::strtod(tok.c_str(), nullptr));
    return values;
  };

  Pyramid pyr;
  std::string key;
  int version = 0;
  manifest >> key >> version;
  if (key != "surfconv_pyramid" || version != 1) throw fail("bad magic");
  manifest >> key >> pyr.source_width >> pyr.source_height;
  if (key != "source") throw fail("expected source");
  manifest >> std::ws;
  const auto gamma = read_doubles("gamma");
  if (gamma.size() != 1) throw fail("gamma");
  pyr.partition.gamma = gamma[0];
  pyr.partition.boundaries = read_doubles("boundaries");
  pyr.partition.rep_depths = read_doubles("rep_depths");
  pyr.partition.Validate();
  std::size_t n_levels = 0;
  manifest >> key >> n_levels;
  if (key != "levels" || n_levels != pyr.partition.n_levels()) {
    throw fail("level count");
  }
  const auto owner = ReadPgm((root / "owner.pgm").string());
  if (!owner.SameSize(pyr.source_width, pyr.source_height)) {
    throw fail("owner size");
  }
  pyr.owner = Image<std::uint8_t>(owner.width(), owner.height());
  std::copy(owner.data().begin(), owner.data().end(), pyr.owner.data().begin());

  for (std::size_t n = 0; n < n_levels; ++n) {
    PyramidLevel level;
    std::string scale_tok;
    int width = 0, height = 0, channels = 0, has_labels = 0;
    manifest >> key >> level.level_index >> scale_tok >> width >> height >>
        channels >> has_labels;
    if (key != "level" || !manifest) throw fail("level line");
    level.scale = std::strtod(scale_tok.c_str(), nullptr);
    const std::string stem = "level_" + std::to_string(level.level_index);
    if (channels == 1 || channels == 3) {
      level.image = ReadPfm((root / (stem + ".pfm")).string());
    } else {
      level.image = ColorImage(width, height, channels);
      for (int ch = 0; ch < channels; ++ch) {
        const auto plane = ReadPfm(
            (root / (stem + "_c" + std::to_string(ch) + ".pfm")).string());
        std::copy(plane.data().begin(), plane.data().end(),
                  level.image.data().begin() + ch * plane.plane_size());
      }
    }
    if (!level.image.SameSize(width, height) ||
        level.image.channels() != channels) {
      throw fail("level image size");
    }
    const auto mask = ReadPgm((root / (stem + "_mask.pgm")).string());
    if (!mask.SameSize(width, height)) throw fail("level mask size");
    level.valid = Mask(width, height);
    std::copy(mask.data().begin(), mask.data().end(),
              level.valid.data().begin());
    if (has_labels) {
      level.labels = ReadLabels((root / (stem + "_labels.pgm")).string());
    }
    pyr.levels.push_back(std::move(level));
  }
  return pyr;
}

}  // namespace surfconv
