#pragma once

// 8-bit grayscale image files: binary/ASCII PGM and PNG (converted to gray).
// Resolution is not read from the file; callers pass the manifest value.

#include <png.h>

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fpeval/core.hpp"

namespace fpeval::io {

namespace detail {

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])) != suffix[i]) return false;
  return true;
}

inline GrayscaleImage load_pgm(const std::string& path, int resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto skip_space = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      return;
    }
  };
  auto read_int = [&] {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > 1'000'000) break;
    }
    if (!any) throw DataError("malformed PGM header in '" + path + "'");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
    throw DataError("'" + path + "' is not a PGM file");
  const bool binary = bytes[1] == '5';
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw DataError("unsupported PGM (need 8-bit) in '" + path + "'");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() - pos < px.size()) throw DataError("truncated PGM '" + path + "'");
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(bytes[pos + i]);
  } else {
    for (auto& p : px) p = static_cast<std::uint8_t>(read_int());
  }
  if (maxval != 255)
    for (auto& p : px) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  return GrayscaleImage(static_cast<int>(w), static_cast<int>(h), std::move(px), resolution);
}

inline GrayscaleImage load_png(const std::string& path, int resolution) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw DataError("cannot read PNG '" + path + "': " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + path + "': " + msg);
  }
  return GrayscaleImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(px), resolution);
}

}  // namespace detail

inline GrayscaleImage load_image(const std::string& path, int resolution = MinutiaeSet::kDefaultResolution) {
  if (detail::has_suffix(path, ".png")) return detail::load_png(path, resolution);
  return detail::load_pgm(path, resolution);
}

inline void save_pgm(const GrayscaleImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write image '" + path + "'");
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels().data()),
            static_cast<std::streamsize>(image.pixels().size()));
  if (!out) throw DataError("failed writing image '" + path + "'");
}

inline void save_png(const GrayscaleImage& image, const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels().data(), 0, nullptr))
    throw DataError("cannot write PNG '" + path + "': " + png.message);
}

}  // namespace fpeval::io
