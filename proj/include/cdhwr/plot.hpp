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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cdhwr/font5x7.hpp"
#include "cdhwr/image.hpp"
#include "cdhwr/text.hpp"

namespace cdhwr {

using Rgb = std::array<std::uint8_t, 3>;

/// Minimal RGB raster for static charts.
class Canvas {
 public:
  Canvas(int height, int width, Rgb bg = {255, 255, 255})
      : h_(height), w_(width), px_(static_cast<std::size_t>(height * width) * 3) {
    for (int i = 0; i < h_ * w_; ++i) set_index(i, bg);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  const std::vector<std::uint8_t>& rgb() const { return px_; }

  void set(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) set_index(y * w_ + x, c);
  }

  Rgb get(int x, int y) const {
    const std::size_t i = static_cast<std::size_t>(y * w_ + x) * 3;
    return {px_[i], px_[i + 1], px_[i + 2]};
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char32_t ch : utf8_decode(s)) {
      if (auto g = glyph5x7(ch)) {
        for (int r = 0; r < 7; ++r)
          for (int k = 0; k < 5; ++k)
            if ((*g)[static_cast<std::size_t>(r)] & (0x10 >> k)) set(x + k, y + r, c);
      }
      x += 6;
    }
  }

  void save_png(const std::string& path) const { write_png_rgb(path, h_, w_, px_); }

 private:
  void set_index(int i, Rgb c) {
    std::copy(c.begin(), c.end(), px_.begin() + static_cast<std::ptrdiff_t>(i) * 3);
  }
  int h_, w_;
  std::vector<std::uint8_t> px_;
};

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, std::abs(v) >= 100 ? "%.0f" : "%.3g", v);
  return buf;
}

/// Draws `ys` against 1..n into the box [x0, x0+w) x [y0, y0+h).
inline void plot_series(Canvas& cv, int x0, int y0, int w, int h, const std::vector<double>& ys,
                        const std::string& label, Rgb color) {
  const Rgb axis{90, 90, 90};
  cv.line(x0, y0, x0, y0 + h, axis);
  cv.line(x0, y0 + h, x0 + w, y0 + h, axis);
  cv.text(x0 + 4, y0 - 10, label, {0, 0, 0});
  std::vector<double> finite;
  for (double v : ys)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return;
  double lo = *std::min_element(finite.begin(), finite.end());
  double hi = *std::max_element(finite.begin(), finite.end());
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= 0.5;
  }
  cv.text(x0 - 6 * static_cast<int>(short_number(hi).size()) - 3, y0, short_number(hi), axis);
  cv.text(x0 - 6 * static_cast<int>(short_number(lo).size()) - 3, y0 + h - 7, short_number(lo),
          axis);
  auto px = [&](std::size_t i) {
    return ys.size() == 1 ? x0 + w / 2
                          : x0 + static_cast<int>(std::lround(static_cast<double>(i) * w /
                                                              static_cast<double>(ys.size() - 1)));
  };
  auto py = [&](double v) {
    return y0 + h - static_cast<int>(std::lround((v - lo) / (hi - lo) * h));
  };
  bool have_prev = false;
  int prev_x = 0, prev_y = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) {
      have_prev = false;
      continue;
    }
    const int x = px(i), y = py(ys[i]);
    if (have_prev) cv.line(prev_x, prev_y, x, y, color);
    cv.set(x, y, color);
    prev_x = x;
    prev_y = y;
    have_prev = true;
  }
}

/// Two stacked panels: mean training loss and test CER per epoch. Epochs
/// without an evaluation carry NaN in `cer`.
inline Canvas training_curves(const std::vector<double>& loss, const std::vector<double>& cer) {
  Canvas cv(420, 640);
  plot_series(cv, 60, 24, 560, 160, loss, "mean loss per epoch", {200, 40, 40});
  plot_series(cv, 60, 234, 560, 160, cer, "test CER per epoch", {40, 80, 200});
  return cv;
}

}  // namespace cdhwr
