#pragma once

// PNG and binary PPM reading/writing. PNG goes through libpng; PPM (P6) is
// parsed directly for dependency-free fixtures.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "wrinkle/error.hpp"
#include "wrinkle/image.hpp"

namespace wrinkle {

namespace detail {

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

inline void png_read_from_buffer(png_structp png, png_bytep out,
                                 png_size_t count) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + count > st->size) png_error(png, "truncated PNG");
  std::memcpy(out, st->data + st->offset, count);
  st->offset += count;
}

inline void png_write_to_string(png_structp png, png_bytep in,
                                png_size_t count) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(in), count);
}

inline void png_flush_noop(png_structp) {}

struct PngErrorSlot {
  char message[256] = "unknown libpng error";
};

// libpng is C: errors must longjmp back to the caller's setjmp, never throw.
[[noreturn]] inline void png_record_error(png_structp png,
                                          png_const_charp msg) {
  auto* slot = static_cast<PngErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof slot->message, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_warn_silent(png_structp, png_const_charp) {}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Decodes an 8-bit (or lower, expanded) PNG held in memory. Palette images
/// become RGB, alpha is dropped, gray stays single-channel.
inline Image decode_png(const std::string& bytes) {
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
    throw IoError("png: bad signature");

  detail::PngErrorSlot err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           detail::png_record_error,
                                           detail::png_warn_silent);
  if (!png) throw IoError("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  detail::PngReadState state{
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size(), 0};
  png_set_read_fn(png, &state, detail::png_read_from_buffer);

  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  if (setjmp(png_jmpbuf(png))) throw IoError(std::string("png: ") + err.message);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  color = png_get_color_type(png, info);
  if (w == 0 || h == 0) throw IoError("png: zero-sized image");
  if (depth == 16) throw IoError("png: 16-bit images are not supported");

  if (setjmp(png_jmpbuf(png))) throw IoError(std::string("png: ") + err.message);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3)
    throw IoError("png: unsupported channel layout");

  const std::size_t stride = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(stride * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = raw.data() + r * stride;
  if (setjmp(png_jmpbuf(png))) throw IoError(std::string("png: ") + err.message);
  png_read_image(png, rows.data());

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  for (png_uint_32 r = 0; r < h; ++r)
    for (std::size_t k = 0; k < static_cast<std::size_t>(w) * channels; ++k)
      img.data[r * w * channels + k] = from_byte(rows[r][k]);
  return img;
}

/// Encodes an image as an 8-bit PNG (RGB or gray) in memory.
inline std::string encode_png(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw InvariantError("png: channels must be 1 or 3");
  detail::PngErrorSlot err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            detail::png_record_error,
                                            detail::png_warn_silent);
  if (!png) throw IoError("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  std::string out;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raster(stride * img.height);
  for (std::size_t k = 0; k < raster.size(); ++k) raster[k] = to_byte(img.data[k]);

  if (setjmp(png_jmpbuf(png))) throw IoError(std::string("png: ") + err.message);
  png_set_write_fn(png, &out, detail::png_write_to_string,
                   detail::png_flush_noop);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, raster.data() + static_cast<std::size_t>(r) * stride);
  png_write_end(png, nullptr);
  return out;
}

/// Parses a binary PPM (P6, maxval 255).
inline Image decode_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  auto token = [&in]() {
    std::string t;
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      in >> t;
      return t;
    }
  };
  if (token() != "P6") throw IoError("ppm: only binary P6 is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError("ppm: malformed header");
  }
  if (w <= 0 || h <= 0) throw IoError("ppm: zero-sized image");
  if (maxval != 255) throw IoError("ppm: only maxval 255 is supported");
  in.get();  // single whitespace byte before the raster

  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  std::string raster(n, '\0');
  if (!in.read(raster.data(), static_cast<std::streamsize>(n)))
    throw IoError("ppm: truncated raster");
  Image img(h, w, 3);
  for (std::size_t k = 0; k < n; ++k)
    img.data[k] = from_byte(static_cast<std::uint8_t>(raster[k]));
  return img;
}

inline std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int k = 0; k < 3; ++k)
        out.push_back(static_cast<char>(
            to_byte(img.at(r, c, img.channels == 3 ? k : 0))));
  return out;
}

/// Writes bytes to `path` through a sibling temporary and a rename, so
/// readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

/// Loads an 8-bit PNG or P6 PPM, detected by content.
inline Image load_image(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  if (bytes.empty()) throw IoError("empty file " + path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
    return decode_ppm(bytes);
  if (bytes.size() >= 8 &&
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0)
    return decode_png(bytes);
  throw IoError("unsupported image format: " + path.string());
}

/// Saves as 8-bit PNG; values are encoded with round(v * 255), half up.
inline void save_image(const Image& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

inline void save_ppm(const Image& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ppm(img));
}

}  // namespace wrinkle
