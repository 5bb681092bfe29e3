#pragma once

#include "hexrec/core.hpp"

#include <cstdint>
#include <vector>

namespace hexrec {

// Row-major image, interleaved channels. Pixel (x, y) has its center at
// continuous image coordinate (x + 0.5, y + 0.5).
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_size(int w, int h) const { return width == w && height == h; }
};

using ImageF = Image<double>;    // float images in [0,1] or vector fields
using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;

inline bool mask_foreground(std::uint8_t v) { return v > 127; }

inline Vec3 pixel_rgb(const ImageF& img, int x, int y) {
  return Vec3(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
}

inline void set_pixel_rgb(ImageF& img, int x, int y, const Vec3& c) {
  img.at(x, y, 0) = c.x();
  img.at(x, y, 1) = c.y();
  img.at(x, y, 2) = c.z();
}

}  // namespace hexrec
