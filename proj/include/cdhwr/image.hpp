// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdhwr {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, std::uint8_t fill = 255)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("image extents must be positive");
  }
  GrayImage(int h, int w, std::vector<std::uint8_t> px)
      : height(h), width(w), pixels(std::move(px)) {
    if (h <= 0 || w <= 0 || pixels.size() != static_cast<std::size_t>(h) * w) {
      throw std::invalid_argument("image extents do not match pixel count");
    }
  }

  bool empty() const { return pixels.empty(); }
  std::uint8_t& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ITU-R 601 luma, rounded to nearest.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(y + 0.5)));
}

namespace detail {

inline bool ends_with_ci(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])) !=
        suffix[i])
      return false;
  }
  return true;
}

inline GrayImage read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageIoError("cannot read PNG " + path + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  // Alpha is flattened onto white.
  png_color background{255, 255, 255};
  if (!png_image_finish_read(&image, &background, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageIoError("cannot decode PNG " + path + ": " + msg);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  if (!color) return GrayImage(h, w, std::move(buffer));
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
  }
  return GrayImage(h, w, std::move(gray));
}

inline std::string pnm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      tok.push_back(ch);
      break;
    }
  }
  while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) tok.push_back(ch);
  return tok;
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path);
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2") {
    throw ImageIoError(path + ": not a PGM file (magic " + magic + ")");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw ImageIoError(path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw ImageIoError(path + ": invalid PGM header values");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> px(n);
  auto scale = [maxval](unsigned v) {
    return static_cast<std::uint8_t>(
        std::min(255.0, std::floor(255.0 * v / maxval + 0.5)));
  };
  if (magic == "P5") {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size()))) {
      throw ImageIoError(path + ": truncated PGM data");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      px[i] = scale(v);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = pnm_token(in);
      if (tok.empty()) throw ImageIoError(path + ": truncated PGM data");
      px[i] = scale(static_cast<unsigned>(std::stoul(tok)));
    }
  }
  return GrayImage(h, w, std::move(px));
}

}  // namespace detail

/// Reads an 8-bit grayscale image from PNG or PGM (P2/P5). Color PNGs are
/// converted to luma.
inline GrayImage read_image(const std::string& path) {
  if (detail::ends_with_ci(path, ".pgm") || detail::ends_with_ci(path, ".pnm")) {
    return detail::read_pgm(path);
  }
  return detail::read_png(path);
}

inline void write_png(const std::string& path, const GrayImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0,
                               nullptr)) {
    throw ImageIoError("cannot write PNG " + path + ": " + image.message);
  }
}

/// RGB raster writer, used for plots.
inline void write_png_rgb(const std::string& path, int height, int width,
                          const std::vector<std::uint8_t>& rgb) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    throw ImageIoError("cannot write PNG " + path + ": " + image.message);
  }
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_image(const std::string& path, const GrayImage& img) {
  if (detail::ends_with_ci(path, ".pgm")) {
    write_pgm(path, img);
  } else {
    write_png(path, img);
  }
}

}  // namespace cdhwr
