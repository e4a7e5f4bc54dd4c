#include "dielink/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace dielink {

GrayImage::GrayImage(int w, int h, float fill, float dynamic_range)
    : width(w), height(h), range(dynamic_range) {
  if (w <= 0 || h <= 0) {
    throw InvalidInputError("GrayImage dimensions must be positive");
  }
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

void GrayImage::validate(const char* what) const {
  if (width <= 0 || height <= 0 || data.empty()) {
    throw InvalidInputError(std::string(what) + ": empty image");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInputError(std::string(what) + ": buffer/dimension mismatch");
  }
  if (!(range > 0.0f)) {
    throw InvalidInputError(std::string(what) + ": dynamic range must be > 0");
  }
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f || v > range) {
      throw InvalidInputError(std::string(what) +
                              ": intensity outside [0, range]");
    }
  }
}

RgbImage::RgbImage(int w, int h, float fill, float dynamic_range)
    : width(w), height(h), range(dynamic_range) {
  if (w <= 0 || h <= 0) {
    throw InvalidInputError("RgbImage dimensions must be positive");
  }
  data.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

void RgbImage::validate(const char* what) const {
  if (width <= 0 || height <= 0 || data.empty()) {
    throw InvalidInputError(std::string(what) + ": empty image");
  }
  if (data.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidInputError(std::string(what) + ": buffer/dimension mismatch");
  }
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f || v > range) {
      throw InvalidInputError(std::string(what) +
                              ": intensity outside [0, range]");
    }
  }
}

RgbImage read_image_rgb(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR | cv::IMREAD_ANYDEPTH);
  if (m.empty()) {
    throw IoError("cannot read image: " + path);
  }
  RgbImage out(m.cols, m.rows, 0.0f, 255.0f);
  if (m.depth() == CV_16U) {
    // 65535 full scale -> 255.0 (exactly /257).
    for (int y = 0; y < m.rows; ++y) {
      const auto* row = m.ptr<cv::Vec3w>(y);
      for (int x = 0; x < m.cols; ++x) {
        out.at(y, x, 0) = static_cast<float>(row[x][2] / 257.0);
        out.at(y, x, 1) = static_cast<float>(row[x][1] / 257.0);
        out.at(y, x, 2) = static_cast<float>(row[x][0] / 257.0);
      }
    }
    return out;
  }
  if (m.depth() != CV_8U) {
    throw IoError("unsupported pixel depth in image: " + path);
  }
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x) {
      // OpenCV loads BGR.
      out.at(y, x, 0) = static_cast<float>(row[x][2]);
      out.at(y, x, 1) = static_cast<float>(row[x][1]);
      out.at(y, x, 2) = static_cast<float>(row[x][0]);
    }
  }
  return out;
}

GrayImage read_image_gray(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
  if (m.empty()) {
    throw IoError("cannot read image: " + path);
  }
  GrayImage out(m.cols, m.rows, 0.0f, 255.0f);
  if (m.depth() == CV_16U) {
    for (int y = 0; y < m.rows; ++y) {
      const auto* row = m.ptr<std::uint16_t>(y);
      for (int x = 0; x < m.cols; ++x) {
        out.at(y, x) = static_cast<float>(row[x] / 257.0);
      }
    }
    return out;
  }
  if (m.depth() != CV_8U) {
    throw IoError("unsupported pixel depth in image: " + path);
  }
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < m.cols; ++x) {
      out.at(y, x) = static_cast<float>(row[x]);
    }
  }
  return out;
}

void write_image_gray(const GrayImage& img, const std::string& path,
                      int bit_depth) {
  img.validate("write_image_gray");
  if (bit_depth != 8 && bit_depth != 16) {
    throw InvalidInputError("write_image_gray: bit_depth must be 8 or 16");
  }
  cv::Mat m;
  if (bit_depth == 16) {
    m.create(img.height, img.width, CV_16UC1);
    const double scale = 65535.0 / img.range;
    for (int y = 0; y < img.height; ++y) {
      auto* row = m.ptr<std::uint16_t>(y);
      for (int x = 0; x < img.width; ++x) {
        double v =
            std::lround(std::clamp(double(img.at(y, x)) * scale, 0.0, 65535.0));
        row[x] = static_cast<std::uint16_t>(v);
      }
    }
  } else {
    m.create(img.height, img.width, CV_8UC1);
    const double scale = 255.0 / img.range;
    for (int y = 0; y < img.height; ++y) {
      auto* row = m.ptr<unsigned char>(y);
      for (int x = 0; x < img.width; ++x) {
        double v =
            std::lround(std::clamp(double(img.at(y, x)) * scale, 0.0, 255.0));
        row[x] = static_cast<unsigned char>(v);
      }
    }
  }
  if (!cv::imwrite(path, m)) {
    throw IoError("cannot write image: " + path);
  }
}

void write_false_color_map(const std::vector<double>& values, int width,
                           int height, double lo, double hi,
                           const std::string& path) {
  if (width <= 0 || height <= 0 ||
      values.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInputError("write_false_color_map: bad dimensions");
  }
  const double span = hi > lo ? hi - lo : 1.0;
  cv::Mat m(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < width; ++x) {
      double t = std::clamp((values[std::size_t(y) * width + x] - lo) / span, 0.0, 1.0);
      // green (low) -> yellow -> red (high), BGR order
      row[x][0] = 0;
      row[x][1] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::max(0.0, t - 0.5) * 2.0)));
      row[x][2] = static_cast<unsigned char>(std::lround(255.0 * std::min(1.0, t * 2.0)));
    }
  }
  if (!cv::imwrite(path, m)) {
    throw IoError("cannot write image: " + path);
  }
}

}  // namespace dielink
