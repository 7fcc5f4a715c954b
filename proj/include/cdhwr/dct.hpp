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

// Block DCT codec for the 128x32 model plane.
//
// Forward transform of an N x N block p(x, y):
//
//   F(i, j) = 1/sqrt(2N) * C(i) C(j) * sum_x sum_y p(x, y)
//             * cos((2x+1) i pi / 2N) * cos((2y+1) j pi / 2N)
//
// with C(0) = 1/sqrt(2) and C(k) = 1 otherwise. For N = 8 this is the
// orthonormal JPEG DCT; for N = 4 it is the orthonormal DCT scaled by
// 1/sqrt(2). In general sum F^2 = (N/8) * sum p^2.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdhwr/preprocess.hpp"

namespace cdhwr {

inline bool valid_block_size(int n) { return n == 4 || n == 8; }

inline void require_block_size(int n) {
  if (!valid_block_size(n)) {
    throw std::invalid_argument("unsupported DCT block size " + std::to_string(n) +
                                " (expected 4 or 8)");
  }
}

/// Overall scale 1/sqrt(2N) of the forward transform.
inline double dct_gain(int n) { return 1.0 / std::sqrt(2.0 * n); }

/// Energy ratio sum(F^2) / sum(p^2) implied by dct_gain.
inline double dct_energy_ratio(int n) { return n / 8.0; }

namespace detail {

// basis[i * n + x] = C(i) * cos((2x + 1) i pi / 2n)
inline const std::vector<double>& dct_basis(int n) {
  auto build = [](int size) {
    std::vector<double> b(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
      const double ci = i == 0 ? 1.0 / std::numbers::sqrt2 : 1.0;
      for (int x = 0; x < size; ++x) {
        b[static_cast<std::size_t>(i) * size + x] =
            ci * std::cos((2 * x + 1) * i * std::numbers::pi / (2.0 * size));
      }
    }
    return b;
  };
  static const std::vector<double> b4 = build(4);
  static const std::vector<double> b8 = build(8);
  return n == 4 ? b4 : b8;
}

}  // namespace detail

/// Forward block DCT of a row-major N x N block (row index x, column y).
template <class T>
std::vector<T> forward_block_dct(std::span<const T> block, int n) {
  require_block_size(n);
  const std::size_t sz = static_cast<std::size_t>(n);
  if (block.size() != sz * sz) throw std::invalid_argument("forward_block_dct: block size mismatch");
  const auto& a = detail::dct_basis(n);
  // rows[i][y] = sum_x a[i][x] p[x][y]
  std::vector<double> rows(sz * sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i)
    for (std::size_t x = 0; x < sz; ++x) {
      const double aix = a[i * sz + x];
      for (std::size_t y = 0; y < sz; ++y) rows[i * sz + y] += aix * block[x * sz + y];
    }
  const double gain = dct_gain(n);
  std::vector<T> out(sz * sz);
  for (std::size_t i = 0; i < sz; ++i)
    for (std::size_t j = 0; j < sz; ++j) {
      double s = 0.0;
      for (std::size_t y = 0; y < sz; ++y) s += rows[i * sz + y] * a[j * sz + y];
      out[i * sz + j] = static_cast<T>(gain * s);
    }
  return out;
}

/// Exact inverse of forward_block_dct.
template <class T>
std::vector<T> inverse_block_dct(std::span<const T> coeffs, int n) {
  require_block_size(n);
  const std::size_t sz = static_cast<std::size_t>(n);
  if (coeffs.size() != sz * sz) throw std::invalid_argument("inverse_block_dct: block size mismatch");
  const auto& a = detail::dct_basis(n);
  // The basis rows are orthogonal with squared norm n/2.
  const double half = n / 2.0;
  const double scale = 1.0 / (dct_gain(n) * half * half);
  std::vector<double> rows(sz * sz, 0.0);  // rows[x][j] = sum_i a[i][x] F[i][j]
  for (std::size_t i = 0; i < sz; ++i)
    for (std::size_t x = 0; x < sz; ++x) {
      const double aix = a[i * sz + x];
      for (std::size_t j = 0; j < sz; ++j) rows[x * sz + j] += aix * coeffs[i * sz + j];
    }
  std::vector<T> out(sz * sz);
  for (std::size_t x = 0; x < sz; ++x)
    for (std::size_t y = 0; y < sz; ++y) {
      double s = 0.0;
      for (std::size_t j = 0; j < sz; ++j) s += rows[x * sz + j] * a[j * sz + y];
      out[x * sz + y] = static_cast<T>(scale * s);
    }
  return out;
}

/// JPEG-style quantizer steps for one block size.
struct QuantTable {
  int block_size = 8;
  int quality = 0;  // 0 for hand-built tables
  std::vector<int> steps;

  int step(int i, int j) const { return steps[static_cast<std::size_t>(i) * block_size + j]; }
};

inline constexpr std::array<int, 64> kJpegLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

/// Standard luminance table scaled with the libjpeg quality formula. The
/// 4x4 table is the top-left corner of the 8x8 one.
inline QuantTable jpeg_quant_table(int block_size, int quality) {
  require_block_size(block_size);
  if (quality < 1 || quality > 100) {
    throw std::invalid_argument("JPEG quality must be in 1..100, got " +
                                std::to_string(quality));
  }
  const long scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable t;
  t.block_size = block_size;
  t.quality = quality;
  t.steps.resize(static_cast<std::size_t>(block_size) * block_size);
  for (int i = 0; i < block_size; ++i)
    for (int j = 0; j < block_size; ++j) {
      const long base = kJpegLuminance[static_cast<std::size_t>(i) * 8 + j];
      t.steps[static_cast<std::size_t>(i) * block_size + j] =
          static_cast<int>(std::max(1L, (base * scale + 50) / 100));
    }
  return t;
}

/// round(c / step) * step per coefficient of a row-major block.
template <class T>
void quantize_dequantize(std::span<T> block, const QuantTable& table) {
  const std::size_t n = static_cast<std::size_t>(table.block_size);
  if (block.size() != n * n || table.steps.size() != n * n) {
    throw std::invalid_argument("quantize_dequantize: block/table size mismatch");
  }
  for (std::size_t k = 0; k < block.size(); ++k) {
    const double step = table.steps[k];
    block[k] = static_cast<T>(std::round(static_cast<double>(block[k]) / step) * step);
  }
}

/// Block-transformed 128x32 plane, laid out like ModelInput.
struct DctImage {
  static constexpr std::size_t kRows = ModelInput::kRows;
  static constexpr std::size_t kCols = ModelInput::kCols;
  int block_size = 8;
  bool quantized = false;
  int quality = 0;
  std::vector<float> coeffs = std::vector<float>(kRows * kCols, 0.0f);

  friend bool operator==(const DctImage&, const DctImage&) = default;
};

/// Pixel levels per unit of the [0, 1] plane. Quantization works on the
/// 8-bit scale JPEG tables are designed for.
inline constexpr double kQuantLevels = 255.0;

/// Level-shifts a [0, 1] plane by -0.5 and transforms each block. With a
/// table, coefficients are quantized and dequantized on the 8-bit scale.
inline DctImage compress_image(const ModelInput& plane, int block_size,
                               const QuantTable* quant = nullptr) {
  require_block_size(block_size);
  const std::size_t n = static_cast<std::size_t>(block_size);
  if (DctImage::kRows % n != 0 || DctImage::kCols % n != 0) {
    throw ShapeError("compress_image: plane not divisible by block size");
  }
  if (quant && quant->block_size != block_size) {
    throw std::invalid_argument("compress_image: quantizer block size mismatch");
  }
  DctImage out;
  out.block_size = block_size;
  out.quantized = quant != nullptr;
  out.quality = quant ? quant->quality : 0;
  std::vector<double> block(n * n);
  for (std::size_t br = 0; br < DctImage::kRows; br += n) {
    for (std::size_t bc = 0; bc < DctImage::kCols; bc += n) {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
          block[x * n + y] = static_cast<double>(plane.at(br + x, bc + y)) - 0.5;
      std::vector<double> c = forward_block_dct<double>(block, block_size);
      if (quant) {
        for (auto& v : c) v *= kQuantLevels;
        quantize_dequantize<double>(c, *quant);
        for (auto& v : c) v /= kQuantLevels;
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out.coeffs[(br + i) * DctImage::kCols + bc + j] = static_cast<float>(c[i * n + j]);
    }
  }
  return out;
}

/// Inverse of compress_image up to quantization loss.
inline ModelInput decompress_image(const DctImage& img) {
  require_block_size(img.block_size);
  const std::size_t n = static_cast<std::size_t>(img.block_size);
  ModelInput out;
  std::vector<double> block(n * n);
  for (std::size_t br = 0; br < DctImage::kRows; br += n) {
    for (std::size_t bc = 0; bc < DctImage::kCols; bc += n) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          block[i * n + j] = img.coeffs[(br + i) * DctImage::kCols + bc + j];
      const std::vector<double> p = inverse_block_dct<double>(block, img.block_size);
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
          out.at(br + x, bc + y) = static_cast<float>(p[x * n + y] + 0.5);
    }
  }
  return out;
}

/// Network-facing plane: coefficients divided by the block size.
inline std::vector<float> network_plane(const DctImage& img) {
  std::vector<float> out(img.coeffs);
  const float s = static_cast<float>(img.block_size);
  for (auto& v : out) v /= s;
  return out;
}

// CDCT stream: "CDCT", version, block size, quantized flag, quality, then
// 128*32 little-endian float32 coefficients, row-major.
inline constexpr std::uint8_t kCdctVersion = 1;

namespace detail {

inline void put_f32(std::ostream& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

inline float get_f32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("unexpected end of stream");
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace detail

inline void write_cdct(std::ostream& out, const DctImage& img) {
  out.write("CDCT", 4);
  const char header[4] = {static_cast<char>(kCdctVersion), static_cast<char>(img.block_size),
                          static_cast<char>(img.quantized ? 1 : 0),
                          static_cast<char>(img.quantized ? img.quality : 0)};
  out.write(header, 4);
  for (float v : img.coeffs) detail::put_f32(out, v);
  if (!out) throw std::runtime_error("failed writing CDCT stream");
}

inline DctImage read_cdct(std::istream& in) {
  char magic[4];
  unsigned char header[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "CDCT") {
    throw std::runtime_error("not a CDCT stream");
  }
  if (!in.read(reinterpret_cast<char*>(header), 4)) throw std::runtime_error("truncated CDCT header");
  if (header[0] != kCdctVersion) {
    throw std::runtime_error("unsupported CDCT version " + std::to_string(header[0]));
  }
  DctImage img;
  img.block_size = header[1];
  require_block_size(img.block_size);
  img.quantized = header[2] != 0;
  img.quality = header[3];
  for (auto& v : img.coeffs) v = detail::get_f32(in);
  return img;
}

inline void save_cdct(const std::string& path, const DctImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_cdct(out, img);
}

inline DctImage load_cdct(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_cdct(in);
}

}  // namespace cdhwr
