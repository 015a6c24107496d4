#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wrinkle/error.hpp"

namespace wrinkle {

/// Smallest edge accepted by the attack pipeline.
inline constexpr int kMinImageEdge = 8;

/// Row-major H x W x C raster of doubles. Pipeline images hold values in
/// [0, 1]; intermediate products may leave that interval until clamp_unit.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {
    if (h <= 0 || w <= 0) throw InvariantError("image: zero-sized image");
    if (c != 1 && c != 3) throw InvariantError("image: channels must be 1 or 3");
  }

  std::size_t index(int row, int col, int ch) const noexcept {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }
  double& at(int row, int col, int ch = 0) noexcept {
    return data[index(row, col, ch)];
  }
  double at(int row, int col, int ch = 0) const noexcept {
    return data[index(row, col, ch)];
  }

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_shape(const Image& other) const noexcept {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }

  bool operator==(const Image&) const = default;
};

/// True when the shape is consistent and every value lies in [0, 1].
inline bool is_valid(const Image& img) noexcept {
  if (img.height <= 0 || img.width <= 0) return false;
  if (img.channels != 1 && img.channels != 3) return false;
  if (img.data.size() != img.pixel_count() * img.channels) return false;
  return std::all_of(img.data.begin(), img.data.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

/// Checks the full pipeline contract, including the minimum edge length.
inline void require_valid(const Image& img, const char* what) {
  if (!is_valid(img))
    throw InvariantError(std::string(what) + ": invalid image");
  if (img.height < kMinImageEdge || img.width < kMinImageEdge)
    throw InvariantError(std::string(what) + ": image smaller than 8x8");
}

/// Element-wise projection onto [0, 1].
inline Image clamp_unit(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

/// Round-half-up 8-bit encoding of a unit value.
inline std::uint8_t to_byte(double v) noexcept {
  const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::floor(scaled + 0.5));
}

inline double from_byte(std::uint8_t b) noexcept { return b / 255.0; }

/// Snaps every value onto the 8-bit grid, so the result survives a PNG
/// round trip unchanged.
inline Image quantize(Image img) {
  for (double& v : img.data) v = from_byte(to_byte(v));
  return img;
}

/// Channel-mean luminance as a single-channel image (a copy for grayscale).
inline Image luminance(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.height, img.width, 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double* px = &img.data[p * 3];
    out.data[p] = (px[0] + px[1] + px[2]) / 3.0;
  }
  return out;
}

/// Bilinear resize with pixel-center alignment and border replication.
inline Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height == height && src.width == width) return src;
  Image out(height, width, src.channels);
  const double sy = static_cast<double>(src.height) / height;
  const double sx = static_cast<double>(src.width) / width;
  for (int i = 0; i < height; ++i) {
    const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = y - y0;
    for (int j = 0; j < width; ++j) {
      const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = x - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = src.at(y0, x0, c) * (1 - fx) + src.at(y0, x1, c) * fx;
        const double bot = src.at(y1, x0, c) * (1 - fx) + src.at(y1, x1, c) * fx;
        out.at(i, j, c) = std::clamp(top * (1 - fy) + bot * fy, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace wrinkle
