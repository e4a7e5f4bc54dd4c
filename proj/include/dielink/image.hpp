#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dielink/core.hpp"

namespace dielink {

// Single-channel intensity grid. Values live in [0, range]; `range` is the
// declared dynamic range (255 for 8-bit sources), kept alongside the pixels
// so downstream stages can stay range-aware without re-scanning.
struct GrayImage {
  int width = 0;
  int height = 0;
  float range = 255.0f;
  std::vector<float> data;  // row-major, height * width

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f, float dynamic_range = 255.0f);

  float& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t pixel_count() const { return data.size(); }
  bool same_shape(const GrayImage& o) const {
    return width == o.width && height == o.height;
  }

  // Throws InvalidInputError on empty dimensions or out-of-range / non-finite
  // intensities. `what` names the image in the error message.
  void validate(const char* what) const;
};

// Interleaved r,g,b triples, same conventions as GrayImage.
struct RgbImage {
  int width = 0;
  int height = 0;
  float range = 255.0f;
  std::vector<float> data;  // row-major, height * width * 3

  RgbImage() = default;
  RgbImage(int w, int h, float fill = 0.0f, float dynamic_range = 255.0f);

  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  void validate(const char* what) const;
};

// File I/O goes through OpenCV imgcodecs, so the usual raster formats
// (png/jpeg/bmp/pnm/tif) are accepted. 16-bit files are detected and
// rescaled; pixels always come back as [0,255] floats.
RgbImage read_image_rgb(const std::string& path);
GrayImage read_image_gray(const std::string& path);

// Quantizes (rounding, clamped to [0, range], scaled to full scale) to the
// requested depth; bit_depth must be 8 or 16, and 16 requires a format that
// stores it (png/tif/pnm).
void write_image_gray(const GrayImage& img, const std::string& path,
                      int bit_depth = 8);

// False-color export of a scalar map: green at `lo` through red at `hi`.
void write_false_color_map(const std::vector<double>& values, int width,
                           int height, double lo, double hi,
                           const std::string& path);

}  // namespace dielink
