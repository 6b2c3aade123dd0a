#pragma once

#include <cstdint>
#include <string>

#include "surfconv/geom.h"
#include "surfconv/image.h"
#include "surfconv/pyramid.h"

namespace surfconv {

// PFM: 1 channel ("Pf") or 3 channels ("PF"), little-endian float32, rows
// stored bottom-to-top as the format requires.
Image<float> ReadPfm(const std::string& path);
void WritePfm(const std::string& path, const Image<float>& image);

// Binary PGM (P5), 8 or 16 bits per sample; 16-bit samples are big-endian.
Image<std::uint16_t> ReadPgm(const std::string& path);
void WritePgm8(const std::string& path, const Image<std::uint8_t>& image);
void WritePgm16(const std::string& path, const Image<std::uint16_t>& image);

// Binary PPM (P6) with 8-bit samples, mapped to/from floats in [0, 1].
ColorImage ReadPpm(const std::string& path);
void WritePpm(const std::string& path, const ColorImage& image);

// 8-bit PNG (gray, gray+alpha, RGB or RGBA) as a 3-channel image in [0, 1].
ColorImage ReadPng(const std::string& path);

// Dispatches on extension: .ppm or .png.
ColorImage ReadColor(const std::string& path);

// .pfm holds meters directly; .pgm holds integers divided by depth_scale.
// Values <= 0 mark invalid pixels.
DepthImage ReadDepth(const std::string& path, double depth_scale = 1000.0);
// Depth as PFM plus an 8-bit validity PGM (255 valid, 0 invalid).
void WriteDepth(const std::string& pfm_path, const std::string& mask_path,
                const DepthImage& depth);

LabelMap ReadLabels(const std::string& path);
void WriteLabels(const std::string& path, const LabelMap& labels);

// ASCII PLY with x y z [red green blue] [label].
PointCloud ReadPly(const std::string& path);
void WritePly(const std::string& path, const PointCloud& cloud);

// Writes manifest.txt, owner.pgm and per-level image/mask/label files into
// `dir` (created if missing). LoadPyramid(DumpPyramid(p)) == p bit for bit.
void DumpPyramid(const std::string& dir, const Pyramid& pyramid);
Pyramid LoadPyramid(const std::string& dir);

}  // namespace surfconv
