#pragma once

// 8-bit RGB PNG for RasterImage, palette PNG for ClassMap (palette == legend).

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "parkgen/error.hpp"
#include "parkgen/raster.hpp"

namespace parkgen {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::uint8_t to_byte(float v) {
  const float c = std::min(1.0f, std::max(0.0f, v));
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace detail

inline void write_png(const std::string& path, const RasterImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::to_byte(img.data[i]);
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
    fail("failed to write PNG '", path, "': ", image.message);
}

inline RasterImage read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail("failed to read PNG '", path, "': ", image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&image);
    fail("failed to decode PNG '", path, "': ", image.message);
  }
  RasterImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0f;
  return img;
}

/// Writes class ids as palette indices; the palette is the legend's colours.
inline void write_classmap_png(const std::string& path, const ClassMap& map) {
  map.validate();
  require(map.width >= 1 && map.height >= 1, "cannot write an empty class map");
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  require(fp != nullptr, "cannot open '", path, "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("failed to write indexed PNG '", path, "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(map.width),
               static_cast<png_uint_32>(map.height), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> palette;
  for (const auto& e : map.legend->entries()) palette.push_back({e.rgb.r, e.rgb.g, e.rgb.b});
  png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(map.width));
  for (int y = 0; y < map.height; ++y) {
    std::copy_n(&map.data[static_cast<std::size_t>(y) * map.width], map.width, row.begin());
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads an indexed PNG and checks that its palette equals `legend`.
inline ClassMap read_classmap_png(const std::string& path, const LegendPtr& legend) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  require(fp != nullptr, "cannot open '", path, "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("libpng initialisation failed");
  }
  // Locals modified after setjmp must not live on the stack frame being unwound.
  auto map = std::make_unique<ClassMap>();
  auto error = std::make_unique<std::string>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("failed to decode indexed PNG '", path, "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto width = static_cast<int>(png_get_image_width(png, info));
  const auto height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  if (color_type != PNG_COLOR_TYPE_PALETTE) {
    *error = "'" + path + "' is not a palette PNG";
  } else {
    png_colorp palette = nullptr;
    int n_palette = 0;
    png_get_PLTE(png, info, &palette, &n_palette);
    bool match = n_palette == static_cast<int>(legend->size());
    for (int i = 0; match && i < n_palette; ++i) {
      const Rgb c{palette[i].red, palette[i].green, palette[i].blue};
      match = c == (*legend)[static_cast<std::size_t>(i)].rgb;
    }
    if (!match) {
      *error = "palette of '" + path + "' does not equal legend '" + legend->id() + "'";
    } else {
      if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
      png_read_update_info(png, info);
      *map = ClassMap(width, height, legend);
      std::vector<png_bytep> rows(static_cast<std::size_t>(height));
      for (int y = 0; y < height; ++y) rows[y] = &map->data[static_cast<std::size_t>(y) * width];
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!error->empty()) fail(*error);
  map->validate();
  return std::move(*map);
}

}  // namespace parkgen
