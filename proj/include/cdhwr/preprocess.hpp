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

// Word-image preprocessing: contrast stretch, aspect-preserving resize onto
// a white 128x32 canvas, then normalization and transpose so the writing
// direction becomes the leading axis.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cdhwr/image.hpp"
#include "cdhwr/tensor.hpp"

namespace cdhwr {

inline constexpr int kCanvasWidth = 128;
inline constexpr int kCanvasHeight = 32;

/// Transposed, normalized model input: 128 rows (one per canvas column) of
/// 32 values in [0, 1].
struct ModelInput {
  static constexpr std::size_t kRows = kCanvasWidth;
  static constexpr std::size_t kCols = kCanvasHeight;
  std::vector<float> raster = std::vector<float>(kRows * kCols, 1.0f);

  float at(std::size_t row, std::size_t col) const { return raster[row * kCols + col]; }
  float& at(std::size_t row, std::size_t col) { return raster[row * kCols + col]; }
  friend bool operator==(const ModelInput&, const ModelInput&) = default;
};

/// Linear stretch of [min, max] onto [0, 255], truncating toward zero.
/// Constant images are returned unchanged.
inline GrayImage contrast_stretch(const GrayImage& img) {
  if (img.empty()) throw std::invalid_argument("contrast_stretch: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const int lo = *lo_it, hi = *hi_it;
  if (lo == hi) return img;
  GrayImage out = img;
  for (auto& p : out.pixels) {
    // Integer arithmetic keeps the truncation exact.
    p = static_cast<std::uint8_t>(255 * (p - lo) / (hi - lo));
  }
  return out;
}

/// Bilinear resample to exactly (height, width), half-pixel centers.
inline GrayImage resize_bilinear(const GrayImage& img, int height, int width) {
  GrayImage out(height, width);
  const double sy = static_cast<double>(img.height) / height;
  const double sx = static_cast<double>(img.width) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = img.at(y0, x0) * (1 - wx) + img.at(y0, x1) * wx;
      const double bottom = img.at(y1, x0) * (1 - wx) + img.at(y1, x1) * wx;
      const double v = top * (1 - wy) + bottom * wy;
      out.at(r, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

/// Scales by the largest aspect-preserving factor that fits 128x32 and
/// places the result at the top-left of a white 128x32 canvas.
inline GrayImage resize_pad(const GrayImage& img) {
  if (img.empty()) throw std::invalid_argument("resize_pad: empty image");
  int nw, nh;
  // Compare 128/w against 32/h without rounding.
  if (static_cast<long>(kCanvasWidth) * img.height <=
      static_cast<long>(kCanvasHeight) * img.width) {
    nw = kCanvasWidth;
    nh = std::max(1, static_cast<int>(static_cast<long>(img.height) * kCanvasWidth / img.width));
  } else {
    nh = kCanvasHeight;
    nw = std::max(1, static_cast<int>(static_cast<long>(img.width) * kCanvasHeight / img.height));
  }
  const GrayImage scaled =
      (nw == img.width && nh == img.height) ? img : resize_bilinear(img, nh, nw);
  GrayImage canvas(kCanvasHeight, kCanvasWidth, 255);
  for (int r = 0; r < nh; ++r)
    for (int c = 0; c < nw; ++c) canvas.at(r, c) = scaled.at(r, c);
  return canvas;
}

inline ModelInput normalize_transpose(const GrayImage& img) {
  if (img.width != kCanvasWidth || img.height != kCanvasHeight) {
    throw ShapeError("normalize_transpose: expected 128x32 image, got " +
                     std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  ModelInput in;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      in.at(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) =
          static_cast<float>(img.at(r, c)) / 255.0f;
  return in;
}

/// Inverse of normalize_transpose (values rounded back to 8 bits).
inline GrayImage denormalize_transpose(const ModelInput& in) {
  GrayImage img(kCanvasHeight, kCanvasWidth);
  for (std::size_t r = 0; r < ModelInput::kRows; ++r) {
    for (std::size_t c = 0; c < ModelInput::kCols; ++c) {
      const float v = std::clamp(in.at(r, c), 0.0f, 1.0f);
      img.at(static_cast<int>(c), static_cast<int>(r)) =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return img;
}

/// Full chain: contrast_stretch -> resize_pad -> normalize_transpose.
inline ModelInput preprocess(const GrayImage& img) {
  return normalize_transpose(resize_pad(contrast_stretch(img)));
}

}  // namespace cdhwr
