#pragma once

// PNG I/O via libpng. Loaders are strict about bit depth and color type:
// a file that is not exactly what the caller expects is rejected with the
// file name in the message, never coerced.

#include "hexrec/core.hpp"
#include "hexrec/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

namespace hexrec {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

inline void open_read(PngReader& r, std::FILE* f, const std::string& path) {
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("not a PNG file: " + path);
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw DataError("libpng init failed reading " + path);
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw DataError("libpng init failed reading " + path);
  if (setjmp(png_jmpbuf(r.png))) throw DataError("PNG decode error in " + path);
  png_init_io(r.png, f);
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);
}

template <typename T>
void read_rows(PngReader& r, Image<T>& img, const std::string& path) {
  if (setjmp(png_jmpbuf(r.png))) throw DataError("PNG decode error in " + path);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(&img.at(0, y, 0));
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
}

template <typename T>
void write_png(const std::string& path, const Image<T>& img, int bit_depth,
               int color_type) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw DataError("cannot write " + path);
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw DataError("libpng init failed writing " + path);
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw DataError("libpng init failed writing " + path);
  if (setjmp(png_jmpbuf(w.png))) throw DataError("PNG encode error in " + path);
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  if (bit_depth == 16) png_set_swap(w.png);  // in-memory u16 is little endian
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(
        reinterpret_cast<png_const_bytep>(&img.at(0, y, 0)));
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

}  // namespace detail

// 8-bit grayscale (masks).
inline ImageU8 read_png_gray8(const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open " + path);
  detail::PngReader r;
  detail::open_read(r, f.get(), path);
  if (png_get_bit_depth(r.png, r.info) != 8 ||
      png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY)
    throw DataError("expected 8-bit grayscale PNG: " + path);
  ImageU8 img(png_get_image_width(r.png, r.info),
              png_get_image_height(r.png, r.info), 1);
  detail::read_rows(r, img, path);
  return img;
}

// 8-bit RGB (color images).
inline ImageU8 read_png_rgb8(const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open " + path);
  detail::PngReader r;
  detail::open_read(r, f.get(), path);
  if (png_get_bit_depth(r.png, r.info) != 8 ||
      png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_RGB)
    throw DataError("expected 8-bit RGB PNG: " + path);
  ImageU8 img(png_get_image_width(r.png, r.info),
              png_get_image_height(r.png, r.info), 3);
  detail::read_rows(r, img, path);
  return img;
}

// 16-bit RGB (normal maps).
inline ImageU16 read_png_rgb16(const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open " + path);
  detail::PngReader r;
  detail::open_read(r, f.get(), path);
  if (png_get_bit_depth(r.png, r.info) != 16 ||
      png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_RGB)
    throw DataError("expected 16-bit RGB PNG: " + path);
  png_set_swap(r.png);
  ImageU16 img(png_get_image_width(r.png, r.info),
               png_get_image_height(r.png, r.info), 3);
  detail::read_rows(r, img, path);
  return img;
}

inline void write_png_gray8(const std::string& path, const ImageU8& img) {
  detail::write_png(path, img, 8, PNG_COLOR_TYPE_GRAY);
}

inline void write_png_rgb8(const std::string& path, const ImageU8& img) {
  detail::write_png(path, img, 8, PNG_COLOR_TYPE_RGB);
}

inline void write_png_rgb16(const std::string& path, const ImageU16& img) {
  detail::write_png(path, img, 16, PNG_COLOR_TYPE_RGB);
}

}  // namespace hexrec
